/* tslint:disable */
/* eslint-disable */

/**
 * Samples the τᵃ bridge on `points` correlations in `[-1, 1]` and, when
 * `tau` is finite, inverts it there.
 */
export function bridge_curve(cutoffs_j: string, cutoffs_k: string, points: number, tau: number): string;

/**
 * Chain graph on `d` latent variables with every other one observed as a
 * three-level ordinal. A positive `lambda` fits that penalty; otherwise the
 * penalty is chosen by HBIC.
 */
export function chain_graph(d: number, strength: number, n: number, seed: number, lambda: number): string;

/**
 * Draws `n` pairs with latent correlation `r`, cuts the first into `levels`
 * equal-mass categories and compares the bridge estimate with naive ones.
 */
export function simulate_estimate(r: number, levels: number, n: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bridge_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly chain_graph: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly simulate_estimate: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
