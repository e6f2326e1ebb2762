/* tslint:disable */
/* eslint-disable */

/**
 * Outcome of a synthetic recovery sweep.
 */
export class Recovery {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly bestLambda: number;
    readonly boundary: boolean;
    readonly convex: boolean;
    readonly grid: Float64Array;
    readonly objectives: Float64Array;
    readonly pHat: Float64Array;
    readonly pTrue: Float64Array;
}

export function decayCurve(dim: number, j_max: number, beta: number, lambda: number, alpha_re: number, alpha_im: number, t_end_s: number, points: number): Float64Array;

export function recoverySweep(dim: number, j_max: number, beta: number, lambda: number, probes: number, sigma: number, seed: number, grid_lo: number, grid_hi: number, grid_points: number): Recovery;

export function wignerAfter(dim: number, j_max: number, beta: number, lambda: number, alpha_re: number, alpha_im: number, t_s: number, range: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_recovery_free: (a: number, b: number) => void;
    readonly decayCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly recoverySweep: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
    readonly recovery_bestLambda: (a: number) => number;
    readonly recovery_boundary: (a: number) => number;
    readonly recovery_convex: (a: number) => number;
    readonly recovery_grid: (a: number) => [number, number];
    readonly recovery_objectives: (a: number) => [number, number];
    readonly recovery_pHat: (a: number) => [number, number];
    readonly recovery_pTrue: (a: number) => [number, number];
    readonly wignerAfter: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
