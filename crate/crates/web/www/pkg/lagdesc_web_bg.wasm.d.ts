/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_scan_free: (a: number, b: number) => void;
export const derivative: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const oracle_check: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const scan: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const scan_crossings: (a: number) => [number, number];
export const scan_dx_pixels: (a: number) => [number, number];
export const scan_dy_pixels: (a: number) => [number, number];
export const scan_m_pixels: (a: number) => [number, number];
export const scan_n: (a: number) => number;
export const scan_summary: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
