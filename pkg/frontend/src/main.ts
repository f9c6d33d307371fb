/**
 * Browser entry point: wires the session, service client, draft storage and
 * view together.  The service origin defaults to the local review service
 * and can be overridden with ?api=http://host:port.
 */

import { CorrectionsRejected, ServiceClient, ServiceUnreachable } from "./api.js";
import { DraftStore } from "./draft.js";
import { ReviewSession } from "./state.js";
import { buildIndex, PayloadMismatch } from "./tree.js";
import { ReviewView } from "./view.js";

const DEFAULT_API = "http://127.0.0.1:8571";

export async function boot(win: Window): Promise<void> {
  const doc = win.document;
  const mount = doc.getElementById("app");
  if (!mount) throw new Error("missing #app mount point");
  const api = new URLSearchParams(win.location.search).get("api") ?? DEFAULT_API;
  const client = new ServiceClient(api);
  const session = new ReviewSession();
  const drafts = new DraftStore(win.localStorage);

  const saved = drafts.load();
  if (saved) session.restoreDraft(saved);

  const view = new ReviewView(doc, mount as HTMLElement, session, {
    draftChanged: () => drafts.save(session.toDraft()),

    loadCategory: async (l1: string) => {
      try {
        const payload = await client.hierarchy(l1);
        const { droppedNodes } = session.loadCategory(buildIndex(payload));
        view.clearBanner();
        if (droppedNodes.length > 0) {
          view.banner(
            `dropped ${droppedNodes.length} stale draft entr` +
              `${droppedNodes.length === 1 ? "y" : "ies"}: ${droppedNodes.join(", ")}`,
            "info",
          );
        }
        drafts.save(session.toDraft());
        view.render();
      } catch (err) {
        view.banner(describe(err), "error");
      }
    },

    submit: async () => {
      try {
        const set = session.toCorrectionSet(new Date().toISOString());
        const receipt = await client.submitCorrections(set);
        session.applySuccess(receipt.receipt);
        drafts.save(session.toDraft());
        view.banner(`accepted ${receipt.accepted} correction(s), ${receipt.mode}`, "info");
      } catch (err) {
        if (err instanceof CorrectionsRejected) {
          session.applyRejection(err.failed);
          view.banner("some corrections were rejected; fix the highlighted rows", "error");
        } else {
          // network or server trouble: the draft is already persisted locally
          view.banner(describe(err), "error");
        }
      }
    },

    exportOutcomes: () => {
      const blob = new Blob([JSON.stringify(session.outcomesDocument(), null, 1) + "\n"], {
        type: "application/json",
      });
      const url = URL.createObjectURL(blob);
      const a = doc.createElement("a");
      a.href = url;
      a.download = `outcomes-${session.category ?? "review"}.json`;
      a.click();
      URL.revokeObjectURL(url);
    },
  });

  view.render();
  try {
    view.categories = await client.categories();
    view.render();
  } catch (err) {
    view.banner(describe(err), "error");
  }
}

function describe(err: unknown): string {
  if (err instanceof ServiceUnreachable) return err.message;
  if (err instanceof PayloadMismatch) return err.message;
  if (err instanceof Error) return err.message;
  return String(err);
}
