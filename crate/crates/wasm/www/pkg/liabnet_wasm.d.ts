/* tslint:disable */
/* eslint-disable */

/**
 * Round-by-round distress of a small network after `seed` defaults.
 *
 * Input JSON: `{"banks": 2, "capital": [..], "liabilities": [[0, 1, 100.0], ..]}`.
 */
export function cascade_trace(network_json: string, seed: number): string;

/**
 * Splits a firm's bank liabilities over its banks in proportion to assets.
 */
export function partition(liabilities: number, bank_assets: Float64Array): Float64Array;

/**
 * Generates a synthetic economy, runs the full analysis and returns a JSON
 * summary: ratios, clustering, DebtRank histograms and the top table.
 */
export function synthetic_economy(n_banks: number, n_firms: number, top_firms: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly cascade_trace: (a: number, b: number, c: number) => [number, number, number, number];
    readonly partition: (a: number, b: number, c: number) => [number, number, number, number];
    readonly synthetic_economy: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
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
