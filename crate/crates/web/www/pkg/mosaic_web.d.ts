/* tslint:disable */
/* eslint-disable */

/**
 * A sampled and rendered scene.
 */
export class Sample {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * One line per object plus the labels measured back from geometry.
     */
    describe(): string;
    /**
     * Pixels as RGBA, row-major, for `ImageData`.
     */
    rgba(): Uint8Array;
    readonly resolution: number;
}

/**
 * Samples per class for `size` samples over `classes` classes.
 */
export function class_allocation(distribution: string, size: number, classes: number): Uint32Array;

/**
 * Per-cell sample count and realized total for a hold-out budget.
 */
export function holdout_budget(diagonals: number, budget: number): Uint32Array;

/**
 * Seen mask of the 10x10 concept grid after removing `diagonals` diagonals,
 * row-major, 1 = seen.
 */
export function holdout_mask(diagonals: number): Uint8Array;

/**
 * Samples scene `index` of a dataset with `seed` and renders it.
 */
export function sample_scene(task: string, variant: string, a: number, b: number, seed: bigint, index: bigint, resolution: number): Sample;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_sample_free: (a: number, b: number) => void;
    readonly class_allocation: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly holdout_budget: (a: number, b: number) => [number, number, number, number];
    readonly holdout_mask: (a: number) => [number, number, number, number];
    readonly sample_describe: (a: number) => [number, number];
    readonly sample_resolution: (a: number) => number;
    readonly sample_rgba: (a: number) => [number, number];
    readonly sample_scene: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint, h: bigint, i: number) => [number, number, number];
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
