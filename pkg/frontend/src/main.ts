import { ApiClient } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

// Served from the same origin as the service (e.g. at /app), so relative
// URLs reach the API directly; override via ?api=<base> for development.
const base = new URLSearchParams(location.search).get("api") ?? "";
void new App(root, new ApiClient(base)).init();
