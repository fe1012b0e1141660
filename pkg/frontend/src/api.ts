/** Service client: job state, layer manifest, and image assets. */

import { sessionFromManifest } from "./session.js";
import { EditSession, GrayBuffer, StackManifest } from "./types.js";

export type PngDecoder = (bytes: ArrayBuffer) => Promise<GrayBuffer>;

export class JobNotDoneError extends Error {
  constructor(public state: string) {
    super(`job is ${state}, not done`);
  }
}

async function getJson(url: string): Promise<any> {
  const resp = await fetch(url);
  if (!resp.ok) throw new Error(`GET ${url} -> ${resp.status}`);
  return resp.json();
}

export async function fetchJobState(baseUrl: string, jobId: number): Promise<string> {
  const body = await getJson(`${baseUrl}/jobs/${jobId}`);
  return body.state;
}

export async function fetchManifest(
  baseUrl: string,
  jobId: number,
): Promise<StackManifest> {
  return getJson(`${baseUrl}/jobs/${jobId}/layers`);
}

export async function fetchAsset(
  baseUrl: string,
  jobId: number,
  name: string,
): Promise<ArrayBuffer> {
  const resp = await fetch(`${baseUrl}/jobs/${jobId}/layers/assets/${name}`);
  if (!resp.ok) throw new Error(`asset ${name} -> ${resp.status}`);
  return resp.arrayBuffer();
}

export async function fetchComposite(
  baseUrl: string,
  jobId: number,
): Promise<ArrayBuffer> {
  const resp = await fetch(`${baseUrl}/jobs/${jobId}/composite`);
  if (!resp.ok) throw new Error(`composite -> ${resp.status}`);
  return resp.arrayBuffer();
}

/** Load a finished job into an edit session (identity transforms). */
export async function loadSession(
  baseUrl: string,
  jobId: number,
  decodePng: PngDecoder,
): Promise<EditSession> {
  const state = await fetchJobState(baseUrl, jobId);
  if (state !== "done") throw new JobNotDoneError(state);
  const manifest = await fetchManifest(baseUrl, jobId);
  const images = new Map<string, GrayBuffer>();
  for (const entry of manifest.layers) {
    const file = entry.completed_file ?? entry.ink_file;
    if (!images.has(file)) {
      images.set(file, await decodePng(await fetchAsset(baseUrl, jobId, file)));
    }
  }
  return sessionFromManifest(jobId, manifest, images);
}
