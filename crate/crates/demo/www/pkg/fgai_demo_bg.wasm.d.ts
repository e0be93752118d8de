/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_scan_free: (a: number, b: number) => void;
export const curvature: (a: number, b: number) => [number, number];
export const fisher_pair: (a: number, b: number, c: number, d: number) => number;
export const scan_augmented_rgba: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number, number, number];
export const scan_fgai_rgba: (a: number, b: number, c: number) => [number, number, number, number];
export const scan_gai_rgba: (a: number, b: number, c: number) => [number, number, number, number];
export const scan_new: (a: number, b: number, c: number, d: bigint, e: number) => [number, number, number];
export const scan_size: (a: number) => number;
export const scan_stats_json: (a: number) => [number, number];
export const shape_name: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
