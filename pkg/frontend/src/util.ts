/** Formatting helpers; no domain math beyond unit rendering. */

const WEI = 10n ** 18n;

/** Parse a decimal ETH string into an exact wei string via BigInt. */
export function ethToWei(text: string): string {
  const trimmed = text.trim();
  if (!/^\d+(\.\d+)?$/.test(trimmed)) {
    throw new Error(`not a decimal amount: ${text}`);
  }
  const [whole, frac = ""] = trimmed.split(".");
  if (frac.length > 18) throw new Error("more than 18 decimal places");
  const fracPadded = frac.padEnd(18, "0");
  return (BigInt(whole) * WEI + BigInt(fracPadded)).toString();
}

export function fmtTokens(value: number): string {
  return value.toLocaleString("en-US", { maximumFractionDigits: 2 });
}

export function fmtEth(value: number): string {
  return `${value.toFixed(6)} ETH`;
}

/** Simulated seconds -> "d hh:mm" label. */
export function fmtSimTime(seconds: number): string {
  const day = Math.floor(seconds / 86400);
  const hh = String(Math.floor((seconds % 86400) / 3600)).padStart(2, "0");
  const mm = String(Math.floor((seconds % 3600) / 60)).padStart(2, "0");
  return `d${day} ${hh}:${mm}`;
}

export function fmtHourWindow(window: [number, number]): string {
  const pad = (h: number) => `${String(h).padStart(2, "0")}:00`;
  return `${pad(window[0])}–${pad(window[1])}`;
}

export function shortAddress(address: string): string {
  return address.length > 12
    ? `${address.slice(0, 8)}…${address.slice(-4)}`
    : address;
}

export function getElement<T extends HTMLElement>(root: ParentNode,
                                                  selector: string): T {
  const node = root.querySelector(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node as T;
}

/** Blob.text() with a FileReader fallback for engines that lack it. */
export function readFileText(file: File): Promise<string> {
  if (typeof file.text === "function") return file.text();
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve(String(reader.result));
    reader.onerror = () => reject(reader.error);
    reader.readAsText(file);
  });
}
