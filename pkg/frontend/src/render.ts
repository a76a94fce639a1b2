// Pure DOM builders. Everything here is a function of API payloads plus view
// flags; no state lives in the DOM itself.

import { stateRows } from "./diff.js";
import type { DbSummary, EditRow, MergedState, TranscriptTurn } from "./types.js";

export function renderStateTable(
  doc: Document,
  prev: MergedState,
  next: MergedState,
): HTMLTableElement {
  const table = doc.createElement("table");
  table.className = "state-table";
  const thead = doc.createElement("thead");
  const head = doc.createElement("tr");
  for (const label of ["domain", "slot", "value"]) {
    const th = doc.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  thead.appendChild(head);
  table.appendChild(thead);
  const body = doc.createElement("tbody");
  table.appendChild(body);
  const cell = (tr: HTMLTableRowElement, text?: string) => {
    const td = doc.createElement("td");
    if (text !== undefined) td.textContent = text;
    tr.appendChild(td);
    return td;
  };
  for (const row of stateRows(prev, next)) {
    const tr = doc.createElement("tr");
    body.appendChild(tr);
    tr.className = `state-row ${row.status}`;
    tr.dataset.domain = row.domain;
    tr.dataset.slot = row.slot;
    cell(tr, row.domain);
    cell(tr, row.slot);
    const valueCell = cell(tr);
    valueCell.className = "value";
    if (row.status === "removed") {
      const del = doc.createElement("del");
      del.textContent = row.value;
      valueCell.appendChild(del);
    } else if (row.status === "changed") {
      const old = doc.createElement("del");
      old.className = "old";
      old.textContent = row.prev ?? "";
      valueCell.appendChild(old);
      valueCell.appendChild(doc.createTextNode(" " + row.value));
    } else {
      valueCell.textContent = row.value;
    }
  }
  return table;
}

export function renderDeltaList(doc: Document, edits: EditRow[]): HTMLUListElement {
  const list = doc.createElement("ul");
  list.className = "delta-list";
  if (edits.length === 0) {
    const li = doc.createElement("li");
    li.className = "empty";
    li.textContent = "(no edits)";
    list.appendChild(li);
    return list;
  }
  for (const edit of edits) {
    const li = doc.createElement("li");
    li.className = edit.value === null ? "edit null-edit" : "edit";
    const label = `${edit.domain}.${edit.slot}`;
    if (edit.value === null) {
      const del = doc.createElement("del");
      del.textContent = label;
      li.appendChild(del);
    } else {
      li.textContent = `${label} = ${edit.value}`;
    }
    list.appendChild(li);
  }
  return list;
}

export function renderDbPanel(doc: Document, db: DbSummary): HTMLElement {
  const panel = doc.createElement("dl");
  panel.className = "db-panel";
  const pairs: [string, string][] = [
    ["matches", String(db.match_count)],
    ["bookable", db.bookable ? "yes" : "no"],
    ["bucket", String(db.bucket_id)],
  ];
  for (const [term, value] of pairs) {
    const dt = doc.createElement("dt");
    dt.textContent = term;
    const dd = doc.createElement("dd");
    dd.textContent = value;
    panel.appendChild(dt);
    panel.appendChild(dd);
  }
  return panel;
}

export function renderTranscript(
  doc: Document,
  turns: TranscriptTurn[],
  showDelex: boolean,
): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "transcript";
  for (const turn of turns) {
    const user = doc.createElement("div");
    user.className = "bubble user";
    user.textContent = turn.user.join(" ");
    wrap.appendChild(user);

    const system = doc.createElement("div");
    system.className = turn.error ? "bubble system faulted" : "bubble system";
    const text = showDelex ? turn.response_delex : turn.response_lex;
    system.textContent = text.join(" ");
    if (turn.warnings > 0) {
      const badge = doc.createElement("span");
      badge.className = "warn-badge";
      badge.textContent = `warnings: ${turn.warnings}`;
      system.appendChild(badge);
    }
    if (turn.error) {
      const note = doc.createElement("span");
      note.className = "error-note";
      note.textContent = turn.error;
      system.appendChild(note);
    }
    wrap.appendChild(system);
  }
  return wrap;
}
