/** Shared types: service manifest schema and editor state. */

export interface LayerManifestEntry {
  id: number;
  box: [number, number, number, number];
  depth_score: number;
  area: number;
  stubbed: boolean;
  ink_file: string;
  region_file: string;
  completed_file: string | null;
}

export interface StackManifest {
  type: "layer_stack";
  width: number;
  height: number;
  /** back-to-front */
  layers: LayerManifestEntry[];
}

/** Row-major single-channel image; 255 is blank ground, lower is content. */
export interface GrayBuffer {
  width: number;
  height: number;
  data: Uint8Array;
}

export const BLANK = 255;

export interface LayerTransform {
  dx: number;
  dy: number;
  /** uniform, about the layer's box center; must stay > 0 */
  scale: number;
}

export const IDENTITY: LayerTransform = { dx: 0, dy: 0, scale: 1 };

export interface EditorLayer {
  id: number;
  /** never mutated by edits; shared across session snapshots */
  image: GrayBuffer;
  box: [number, number, number, number];
  depthScore: number;
  visible: boolean;
  transform: LayerTransform;
}

export interface EditSession {
  jobId: number;
  width: number;
  height: number;
  /** back-to-front; array index is the stack position */
  layers: EditorLayer[];
  dirty: boolean;
}

export type Edit =
  | { kind: "move"; id: number; dx: number; dy: number }
  | { kind: "scale"; id: number; factor: number }
  | { kind: "delete"; id: number }
  | { kind: "reorder"; id: number; position: number };
