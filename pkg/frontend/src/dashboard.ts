// Panel rendering: population series with pinned prediction overlays,
// welfare/budget, shadow-price bars, the eigenvalue half-plane, and
// the shock composer.

import { barChart, halfPlaneChart, lineChart, Series } from "./charts.js";
import { ConsoleStore, validateDraft } from "./state.js";

export function renderPopulations(host: HTMLElement, store: ConsoleStore):
    void {
  const fams = store.snapshot?.families ?? [];
  const series: Series[] = fams.map((name, j) => ({
    label: name,
    x: store.t,
    y: store.N.map((row) => row[j]),
  }));
  for (const pin of store.pinned) {
    const eq = pin.prediction.predicted_equilibrium;
    const t1 = store.t.length ? store.t[store.t.length - 1] : pin.t + 1;
    eq.forEach((value, j) => {
      series.push({
        label: `${fams[j] ?? j} (predicted)`,
        x: [pin.t, t1],
        y: [value, value],
        dashed: true,
        color: "#555",
      });
    });
  }
  lineChart(host, series, { legend: false });
}

export function renderWelfare(host: HTMLElement, store: ConsoleStore): void {
  lineChart(host, [
    { label: "welfare", x: store.t, y: store.W },
    { label: "budget use", x: store.t, y: store.util, dashed: true },
  ]);
}

export function renderPrices(host: HTMLElement, store: ConsoleStore): void {
  const snap = store.snapshot;
  if (!snap) return;
  barChart(host, snap.resources, snap.lambda);
}

export function renderSpectrum(host: HTMLElement, store: ConsoleStore): void {
  if (!store.analysis) {
    host.textContent = "no analysis yet";
    return;
  }
  halfPlaneChart(host, store.analysis.eigenvalues);
}

export function renderStatus(host: HTMLElement, store: ConsoleStore): void {
  const snap = store.snapshot;
  const bits: string[] = [];
  if (snap) {
    bits.push(`t = ${snap.t.toFixed(2)}`);
    bits.push(`status: ${snap.status}`);
    bits.push(`W* = ${snap.W_star.toFixed(4)}`);
    bits.push(`budget ${Math.round(snap.budget_utilization * 100)}%`);
    if (snap.spectral_abscissa !== null) {
      bits.push(`abscissa ${snap.spectral_abscissa.toFixed(3)}`);
    }
  }
  host.textContent = bits.join("  |  ");
  host.classList.toggle("stale", store.stale);
  const banner = document.getElementById("stale-banner");
  if (banner) banner.style.display = store.stale ? "block" : "none";
}

export function renderComposer(host: HTMLElement, store: ConsoleStore,
    hooks: { onPreview: () => void; onApply: () => void }): void {
  const snap = store.snapshot;
  if (!snap) {
    host.textContent = "waiting for session";
    return;
  }
  host.replaceChildren();
  const select = document.createElement("select");
  select.id = "shock-field";
  snap.families.forEach((name, j) => {
    const opt = document.createElement("option");
    opt.value = `w[${j}]`;
    opt.textContent = `weight: ${name}`;
    select.appendChild(opt);
  });
  snap.resources.forEach((name, m) => {
    const opt = document.createElement("option");
    opt.value = `R[${m}]`;
    opt.textContent = `endowment: ${name}`;
    select.appendChild(opt);
  });
  const slider = document.createElement("input");
  slider.type = "range";
  slider.id = "shock-value";
  slider.min = "0.01";
  slider.step = "0.01";
  const number = document.createElement("input");
  number.type = "number";
  number.id = "shock-value-number";
  number.step = "0.01";

  const syncBounds = () => {
    if (select.value.startsWith("w")) {
      slider.min = "0.01";
      slider.max = "0.99";
    } else {
      slider.min = "0.1";
      slider.max = "60";
    }
    slider.value = number.value = slider.min;
  };
  syncBounds();
  select.onchange = () => {
    syncBounds();
    store.draft = null;
    store.preview = null;
  };
  const setDraft = (value: number) => {
    store.draft = { field: select.value, value };
    store.preview = null;
    store.previewError = validateDraft(store.draft, snap);
  };
  slider.oninput = () => {
    number.value = slider.value;
    setDraft(Number(slider.value));
  };
  number.oninput = () => {
    slider.value = number.value;
    setDraft(Number(number.value));
  };

  const previewBtn = document.createElement("button");
  previewBtn.id = "preview-btn";
  previewBtn.textContent = "preview";
  previewBtn.onclick = hooks.onPreview;
  const applyBtn = document.createElement("button");
  applyBtn.id = "apply-btn";
  applyBtn.textContent = "apply";
  applyBtn.disabled = !store.applyEnabled;
  applyBtn.onclick = hooks.onApply;

  const report = document.createElement("div");
  report.id = "preview-report";
  if (store.previewError) {
    report.textContent = store.previewError;
    report.className = "error";
  } else if (store.preview) {
    const p = store.preview;
    const parts = [
      `${p.field}: ${p.old.toPrecision(4)} -> ${p.new.toPrecision(4)}`,
      `predicted equilibrium: [${p.predicted_equilibrium
        .map((x) => x.toPrecision(3)).join(", ")}]`,
      `stability: ${p.regime_flags.stability}`,
    ];
    if (p.elasticities) {
      const rows = p.elasticities.labels.map((label, i) => {
        const v = p.elasticities!.values[i];
        return `${label}: ${v === null ? "n/a" : v.toPrecision(3)}`;
      });
      parts.push(`${p.elasticities.kind}: ${rows.join(", ")}`);
    }
    report.textContent = parts.join("\n");
    report.className = "preview";
  }

  host.append(select, slider, number, previewBtn, applyBtn, report);
}
