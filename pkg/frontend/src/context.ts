import type { ApiClient } from "./api.js";

/** Shared services handed to every view. */
export interface ViewContext {
  api: ApiClient;
  toast: (message: string) => void;
  refresh: () => Promise<void>;
}
