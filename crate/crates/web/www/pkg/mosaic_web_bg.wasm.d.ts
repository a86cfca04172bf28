/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_sample_free: (a: number, b: number) => void;
export const class_allocation: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const holdout_budget: (a: number, b: number) => [number, number, number, number];
export const holdout_mask: (a: number) => [number, number, number, number];
export const sample_describe: (a: number) => [number, number];
export const sample_resolution: (a: number) => number;
export const sample_rgba: (a: number) => [number, number];
export const sample_scene: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint, h: bigint, i: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
