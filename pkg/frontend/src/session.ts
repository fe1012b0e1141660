/** Edit session state: pure edits over immutable snapshots, undo/redo.
 *
 * Edits never touch layer image buffers, only transforms, visibility,
 * and stack order; undo is a walk back through whole-session snapshots.
 */

import {
  Edit,
  EditorLayer,
  EditSession,
  GrayBuffer,
  IDENTITY,
  StackManifest,
} from "./types.js";

export function sessionFromManifest(
  jobId: number,
  manifest: StackManifest,
  images: Map<string, GrayBuffer>,
): EditSession {
  const layers: EditorLayer[] = manifest.layers.map((entry) => {
    const file = entry.completed_file ?? entry.ink_file;
    const image = images.get(file);
    if (!image) throw new Error(`missing image asset ${file}`);
    return {
      id: entry.id,
      image,
      box: entry.box,
      depthScore: entry.depth_score,
      visible: true,
      transform: { ...IDENTITY },
    };
  });
  return {
    jobId,
    width: manifest.width,
    height: manifest.height,
    layers,
    dirty: false,
  };
}

function indexOfLayer(session: EditSession, id: number): number {
  const index = session.layers.findIndex((l) => l.id === id);
  if (index < 0) throw new Error(`unknown layer id ${id}`);
  return index;
}

/** Apply one edit, returning a new session; the input is untouched. */
export function applyEdit(session: EditSession, edit: Edit): EditSession {
  const index = indexOfLayer(session, edit.id);
  const layers = session.layers.slice();
  const layer = layers[index];
  switch (edit.kind) {
    case "move":
      layers[index] = {
        ...layer,
        transform: {
          ...layer.transform,
          dx: layer.transform.dx + edit.dx,
          dy: layer.transform.dy + edit.dy,
        },
      };
      break;
    case "scale": {
      const scale = layer.transform.scale * edit.factor;
      if (!(scale > 0)) throw new Error(`scale must stay positive, got ${scale}`);
      layers[index] = { ...layer, transform: { ...layer.transform, scale } };
      break;
    }
    case "delete":
      layers[index] = { ...layer, visible: false };
      break;
    case "reorder": {
      if (edit.position < 0 || edit.position >= layers.length) {
        throw new Error(`stack position ${edit.position} out of range`);
      }
      layers.splice(index, 1);
      layers.splice(edit.position, 0, layer);
      break;
    }
  }
  return { ...session, layers, dirty: true };
}

/** Undo/redo over session snapshots. */
export class Editor {
  private past: EditSession[] = [];
  private future: EditSession[] = [];

  constructor(public current: EditSession) {}

  apply(edit: Edit): EditSession {
    this.past.push(this.current);
    this.future = [];
    this.current = applyEdit(this.current, edit);
    return this.current;
  }

  canUndo(): boolean {
    return this.past.length > 0;
  }

  canRedo(): boolean {
    return this.future.length > 0;
  }

  undo(): EditSession {
    const previous = this.past.pop();
    if (previous) {
      this.future.push(this.current);
      this.current = previous;
    }
    return this.current;
  }

  redo(): EditSession {
    const next = this.future.pop();
    if (next) {
      this.past.push(this.current);
      this.current = next;
    }
    return this.current;
  }
}
