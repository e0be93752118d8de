/* tslint:disable */
/* eslint-disable */

/**
 * One synthetic scan run through the pipeline.
 */
export class Scan {
    free(): void;
    [Symbol.dispose](): void;
    augmented_rgba(combo: string, flip: boolean, rotation: number, noise: number, seed: bigint): Uint8Array;
    /**
     * `combo` like "H-LD-SI"; channels follow the order given.
     */
    fgai_rgba(combo: string): Uint8Array;
    gai_rgba(kind: string): Uint8Array;
    /**
     * `relief` is "bump" or "dent"; `grid` is the mesh resolution per side.
     */
    constructor(relief: string, grid: number, seed: bigint, size: number);
    size(): number;
    stats_json(): string;
}

/**
 * `[K, H, SI]` for two principal curvatures given in either order.
 */
export function curvature(k1: number, k2: number): Float64Array;

/**
 * Discrimination criterion of one feature between two classes.
 */
export function fisher_pair(mean_a: number, std_a: number, mean_b: number, std_b: number): number;

/**
 * Nearest of the five landmark shapes on the shape-index scale.
 */
export function shape_name(shape_index: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_scan_free: (a: number, b: number) => void;
    readonly curvature: (a: number, b: number) => [number, number];
    readonly fisher_pair: (a: number, b: number, c: number, d: number) => number;
    readonly scan_augmented_rgba: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number, number];
    readonly scan_fgai_rgba: (a: number, b: number, c: number) => [number, number, number, number];
    readonly scan_gai_rgba: (a: number, b: number, c: number) => [number, number, number, number];
    readonly scan_new: (a: number, b: number, c: number, d: bigint, e: number) => [number, number, number];
    readonly scan_size: (a: number) => number;
    readonly scan_stats_json: (a: number) => [number, number];
    readonly shape_name: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
