/** Session flow controller: start, annotate, stop.
 *
 * Every number in the view comes from a service response. The controller
 * serializes in-flight requests (one annotate at a time) and resolves 409
 * conflicts by refetching the pending query and asking the user to resubmit.
 */

import { ApiError, Client, PendingQuery, Report, SessionInfo, TrajectoryRow } from "./api.js";

export type Phase = "idle" | "annotating" | "report";

export interface ViewState {
  phase: Phase;
  banner: string | null;
  info: SessionInfo | null;
  pending: PendingQuery | null;
  posterior: number[] | null;
  mapBest: number | null;
  empiricalBest: number | null;
  history: TrajectoryRow[];
  report: Report | null;
  blind: boolean;
  submitting: boolean;
}

function initialState(): ViewState {
  return {
    phase: "idle",
    banner: null,
    info: null,
    pending: null,
    posterior: null,
    mapBest: null,
    empiricalBest: null,
    history: [],
    report: null,
    blind: true,
    submitting: false,
  };
}

export class SessionController {
  private state: ViewState = initialState();

  constructor(
    private readonly api: Client,
    private readonly onChange: (state: ViewState) => void,
  ) {}

  get view(): ViewState {
    return this.state;
  }

  private update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  toggleBlind(): void {
    this.update({ blind: !this.state.blind });
  }

  async start(params: {
    bundle: string;
    tau: number;
    budget: number;
    mode: "live" | "replay";
  }): Promise<void> {
    this.state = initialState();
    try {
      const info = await this.api.createSession({
        ...params,
        // outputs only need to travel when the annotator may reveal them
        reveal_outputs: params.mode === "live",
      });
      if (info.budget === 0) {
        this.update({ info });
        await this.stop();
        return;
      }
      const pending = await this.api.nextQuery(info.session_id);
      this.update({ phase: "annotating", info, pending, banner: null });
    } catch (err) {
      this.state = initialState();
      this.update({ banner: describe(err) });
    }
  }

  /** Submit the reference text (live) or accept the replay annotation. */
  async submit(referenceText?: string): Promise<void> {
    const { info, pending, submitting } = this.state;
    if (!info || !pending || submitting) {
      return;
    }
    if (info.mode === "live" && !(referenceText ?? "").trim()) {
      this.update({ banner: "Enter the reference answer before submitting." });
      return;
    }
    this.update({ submitting: true, banner: null });
    try {
      const result = await this.api.annotate(info.session_id, {
        query_id: pending.query_id,
        ...(info.mode === "live"
          ? { reference_text: referenceText }
          : { accept_replay: true }),
      });
      const row: TrajectoryRow = {
        step: result.step - 1,
        query: pending.query_id,
        oracle_row: [],
        posterior: result.posterior,
        map_best: result.map_best,
        empirical_best: result.empirical_best,
      };
      const done = result.step >= result.budget;
      const next = done ? null : await this.api.nextQuery(info.session_id);
      this.update({
        submitting: false,
        posterior: result.posterior,
        mapBest: result.map_best,
        empiricalBest: result.empirical_best,
        history: [...this.state.history, row],
        pending: next,
      });
      if (done) {
        await this.stop();
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // stale pending query: fetch the server's view and ask to resubmit
        try {
          const pendingNow = await this.api.nextQuery(info.session_id);
          this.update({
            submitting: false,
            pending: pendingNow,
            banner: "The pending query changed; please resubmit.",
          });
        } catch (refetchErr) {
          this.update({ submitting: false, banner: describe(refetchErr) });
        }
        return;
      }
      this.update({ submitting: false, banner: describe(err) });
    }
  }

  /** Early stop: fetch the report view; allowed at any step. */
  async stop(): Promise<void> {
    const info = this.state.info;
    if (!info) {
      return;
    }
    try {
      const report = await this.api.report(info.session_id);
      this.update({
        phase: "report",
        report,
        posterior: report.posterior,
        mapBest: report.map_best,
        empiricalBest: report.empirical_best,
        pending: null,
      });
    } catch (err) {
      this.update({ banner: describe(err) });
    }
  }

  dismissBanner(): void {
    this.update({ banner: null });
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.code}: ${err.message}`;
  }
  return String(err);
}
