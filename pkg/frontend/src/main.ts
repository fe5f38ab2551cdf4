import { Client } from "./api.js";
import { Wizard } from "./wizard.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
new Wizard(root, new Client("")).mount();
