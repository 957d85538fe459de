import { ApiClient } from "./api.js";
import { ExplorerApp } from "./app.js";

declare global {
  interface Window {
    AMBIPRUNE_API_BASE?: string;
  }
}

const query = new URLSearchParams(window.location.search);
const baseUrl = query.get("api") ?? window.AMBIPRUNE_API_BASE ?? "";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
const app = new ExplorerApp(root, new ApiClient(baseUrl));
void app.init();
