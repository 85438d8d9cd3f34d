import { startConsole } from "./ui.js";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app container");
}
// served from /console/ on the auth server itself; same origin by default
const baseUrl = new URLSearchParams(location.search).get("server") ?? location.origin;
startConsole(root, baseUrl);
