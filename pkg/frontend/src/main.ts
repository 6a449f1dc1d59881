import { Client } from "./api.js";
import { SessionController, ViewState } from "./app.js";
import { escapeHtml, renderHistory, renderOutputs, renderPosterior, renderReport } from "./render.js";

const el = (id: string) => document.getElementById(id) as HTMLElement;

const controller = new SessionController(new Client(""), render);

function render(state: ViewState): void {
  const banner = el("banner");
  banner.hidden = state.banner === null;
  banner.innerHTML = state.banner
    ? `${escapeHtml(state.banner)} <button id="dismiss">dismiss</button>`
    : "";
  const dismiss = document.getElementById("dismiss");
  if (dismiss) {
    dismiss.onclick = () => controller.dismissBanner();
  }

  el("setup").hidden = state.phase !== "idle";
  el("annotate").hidden = state.phase !== "annotating";
  el("report").hidden = state.phase !== "report";

  if (state.phase === "annotating" && state.info && state.pending) {
    const names = state.info.model_names;
    el("progress").textContent =
      `step ${state.pending.step} of ${state.pending.budget} — bundle ${state.info.mode}`;
    el("query").innerHTML =
      `<b>query #${state.pending.query_id}</b>` +
      (state.pending.query_text ? `<p>${escapeHtml(state.pending.query_text)}</p>` : "");
    el("outputs").innerHTML = state.blind
      ? `<p class="muted">model outputs hidden (blind mode)</p>`
      : renderOutputs(state.pending.outputs, names);
    el("bars").innerHTML = state.posterior
      ? renderPosterior(names, state.posterior)
      : `<p class="muted">uniform prior — annotate to update</p>`;
    el("history").innerHTML = renderHistory(state.history, names);
    (el("reference") as HTMLTextAreaElement).hidden = state.info.mode !== "live";
    const submit = el("submit") as HTMLButtonElement;
    submit.disabled = state.submitting;
    submit.textContent = state.info.mode === "live" ? "submit reference" : "accept annotation";
  }

  if (state.phase === "report" && state.report) {
    el("report-body").innerHTML = renderReport(state.report);
  }
}

el("start").onclick = () => {
  const bundle = (el("bundle") as HTMLInputElement).value.trim();
  const tau = parseFloat((el("tau") as HTMLInputElement).value);
  const budget = parseInt((el("budget") as HTMLInputElement).value, 10);
  const mode = (el("mode") as HTMLSelectElement).value as "live" | "replay";
  void controller.start({ bundle, tau, budget, mode });
};

el("submit").onclick = () => {
  const text = (el("reference") as HTMLTextAreaElement).value;
  void controller.submit(text).then(() => {
    (el("reference") as HTMLTextAreaElement).value = "";
  });
};

el("stop").onclick = () => void controller.stop();
el("blind-toggle").onclick = () => controller.toggleBlind();
el("restart").onclick = () => window.location.reload();

render(controller.view);
