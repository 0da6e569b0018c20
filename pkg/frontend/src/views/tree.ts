// Execution-tree browser: node-link view, five levels deep by default,
// expandable per node. Node fill encodes aggregated (subtree) time on a
// purple ramp; clicking a node cross-highlights the Gantt, Utilization
// overlay, and Aggregated Gantt through the shared hub selection.

import type { TreeNode, TreeResponse } from "../api/types.js";
import type { ApiClient } from "../api/client.js";
import type { ViewHub } from "../state/hub.js";
import { purpleFor } from "../render/colors.js";

export const DEFAULT_TREE_DEPTH = 5;

export interface TreeNodeDisplay {
  node: TreeNode;
  /** Purple ramp fill derived from subtree time share. */
  fill: string;
  /** Whether the node currently hides its children. */
  collapsed: boolean;
}

export class TreeView {
  depth = DEFAULT_TREE_DEPTH;
  response: TreeResponse | null = null;
  /** Client-side collapse overrides on top of the server's depth cut. */
  private collapsedOverride = new Map<number, boolean>();

  constructor(
    readonly name: string,
    private readonly hub: ViewHub,
    private readonly client: ApiClient,
  ) {}

  async load(): Promise<void> {
    this.response = await this.client.tree(this.hub.datasetId, this.depth);
  }

  private maxSubtree(): number {
    let max = 1;
    for (const root of this.response?.roots ?? []) {
      const node = this.byId(root);
      if (node !== null) max = Math.max(max, node.subtree_duration);
    }
    return max;
  }

  byId(nodeId: number): TreeNode | null {
    return this.response?.nodes.find((n) => n.node_id === nodeId) ?? null;
  }

  private isCollapsed(node: TreeNode): boolean {
    return this.collapsedOverride.get(node.node_id) ?? node.collapsed;
  }

  /** Depth-first list of nodes visible under current collapse state. */
  visible(): TreeNodeDisplay[] {
    if (this.response === null) return [];
    const max = this.maxSubtree();
    const out: TreeNodeDisplay[] = [];
    const walk = (nodeId: number): void => {
      const node = this.byId(nodeId);
      if (node === null) return;
      const collapsed = this.isCollapsed(node);
      out.push({
        node,
        fill: purpleFor(node.subtree_duration / max),
        collapsed,
      });
      if (!collapsed) for (const child of node.children) walk(child);
    };
    for (const root of this.response.roots) walk(root);
    return out;
  }

  /**
   * Expand a node. Children beyond the fetched depth require a deeper
   * server cut; the view refetches with the needed limit.
   */
  async expand(nodeId: number): Promise<void> {
    const node = this.byId(nodeId);
    if (node === null) return;
    this.collapsedOverride.set(nodeId, false);
    const missing = node.children.some((c) => this.byId(c) === null);
    if (missing) {
      this.depth = Math.max(this.depth, node.depth + 1);
      await this.load();
    }
  }

  collapse(nodeId: number): void {
    this.collapsedOverride.set(nodeId, true);
  }

  /** Click handler: publish the node selection to every linked view. */
  select(nodeId: number): void {
    this.hub.selectNode(nodeId);
  }

  /** Hover label: the full root-first context path. */
  hoverLabel(nodeId: number): string {
    const node = this.byId(nodeId);
    return node === null ? "" : node.context.join(" > ");
  }
}
