import "./style.css";
import { Api } from "./api";
import { mountComparison } from "./views/comparison";
import { mountConfig } from "./views/config";
import { mountDashboard, ViewHandle } from "./views/dashboard";
import { mountDetails } from "./views/details";

const ROUTES: Record<string, (el: HTMLElement, api: Api) => ViewHandle> = {
  "#/dashboard": (el, api) => mountDashboard(el, api),
  "#/details": mountDetails,
  "#/comparison": mountComparison,
  "#/configuration": mountConfig,
};

function start(): void {
  const api = new Api("");
  const nav = document.getElementById("nav")!;
  const view = document.getElementById("view")!;
  nav.innerHTML = Object.keys(ROUTES)
    .map((hash) => `<a href="${hash}" data-route="${hash}">${hash.slice(2)}</a>`)
    .join("");

  let current: ViewHandle | null = null;

  function route(): void {
    const hash = ROUTES[location.hash] ? location.hash : "#/dashboard";
    nav.querySelectorAll("a").forEach((a) => {
      a.classList.toggle("active", a.dataset.route === hash);
    });
    current?.destroy();
    view.innerHTML = "";
    current = ROUTES[hash](view, api);
  }

  window.addEventListener("hashchange", route);
  route();
}

start();
