/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_recovery_free: (a: number, b: number) => void;
export const decayCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
export const recoverySweep: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
export const recovery_bestLambda: (a: number) => number;
export const recovery_boundary: (a: number) => number;
export const recovery_convex: (a: number) => number;
export const recovery_grid: (a: number) => [number, number];
export const recovery_objectives: (a: number) => [number, number];
export const recovery_pHat: (a: number) => [number, number];
export const recovery_pTrue: (a: number) => [number, number];
export const wignerAfter: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
