import { SteeringClient } from "./api.js";
import { renderComposer, renderPopulations, renderPrices, renderSpectrum,
  renderStatus, renderWelfare } from "./dashboard.js";
import { ConsoleStore } from "./state.js";

const POLL_MS = 500;

async function boot(): Promise<void> {
  const client = new SteeringClient("");
  let config: unknown;
  try {
    config = await client.defaultConfig();
  } catch {
    const el = document.getElementById("status");
    if (el) el.textContent = "service has no default config; POST /sessions directly";
    return;
  }
  const snap = await client.createSession(config);
  const store = new ConsoleStore(client, snap.id);
  store.snapshot = snap;

  const panels = {
    populations: document.getElementById("panel-populations")!,
    welfare: document.getElementById("panel-welfare")!,
    prices: document.getElementById("panel-prices")!,
    spectrum: document.getElementById("panel-spectrum")!,
    composer: document.getElementById("panel-composer")!,
    status: document.getElementById("status")!,
  };

  const redraw = () => {
    renderStatus(panels.status, store);
    renderPopulations(panels.populations, store);
    renderWelfare(panels.welfare, store);
    renderPrices(panels.prices, store);
    renderSpectrum(panels.spectrum, store);
    renderComposer(panels.composer, store, {
      onPreview: async () => {
        await store.requestPreview();
        redraw();
      },
      onApply: async () => {
        await store.confirmApply();
        redraw();
      },
    });
  };

  document.getElementById("advance-btn")!.onclick = async () => {
    await client.advance(store.sessionId, 2.0);
  };
  document.getElementById("analyze-btn")!.onclick = async () => {
    await store.refreshAnalysis();
    redraw();
  };

  redraw();
  let busy = false;
  setInterval(async () => {
    if (busy) return; // one in-flight poll at a time
    busy = true;
    try {
      await store.refresh();
      redraw();
    } finally {
      busy = false;
    }
  }, POLL_MS);
}

boot();
