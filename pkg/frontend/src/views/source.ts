// Source code view: files referenced by the trace, shown as text with
// token-level syntax highlighting.

import type { SourceFile } from "../api/types.js";
import type { ApiClient } from "../api/client.js";
import type { ViewHub } from "../state/hub.js";
import { tokenize, type Token } from "../render/highlight.js";

export interface HighlightedFile {
  path: string;
  tokens: Token[];
}

export class SourceView {
  files: HighlightedFile[] = [];

  constructor(
    readonly name: string,
    private readonly hub: ViewHub,
    private readonly client: ApiClient,
  ) {}

  async load(): Promise<void> {
    const resp = await this.client.source(this.hub.datasetId);
    const raw: SourceFile[] = resp?.files ?? [];
    this.files = raw.map((f) => ({ path: f.path, tokens: tokenize(f.text) }));
  }
}
