/* tslint:disable */
/* eslint-disable */

/**
 * Result of scanning a field over a square grid.
 */
export class Scan {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Flattened `[kind, x, y, jump]` quadruples; kind 0 is a zero of
     * dM/dx0, kind 1 a zero of dM/dy0.
     */
    crossings(): Float64Array;
    /**
     * Sign of dM/dx0: dark negative, light positive, mid-grey zero.
     */
    dx_pixels(): Uint8Array;
    dy_pixels(): Uint8Array;
    /**
     * Greyscale M, one byte per node, top row first.
     */
    m_pixels(): Uint8Array;
    /**
     * Nodes per side.
     */
    readonly n: number;
    readonly summary: string;
}

/**
 * Simplified derivative of `expr` with respect to `var` (`x`, `y` or `t`).
 */
export function derivative(expr: string, _var: string): string;

/**
 * Numeric and quadrature values of M for a linear saddle, as
 * `[numeric, oracle, relative error]`.
 */
export function oracle_check(lambda: number, mu: number, x: number, y: number, tau: number): Float64Array;

/**
 * Computes M for `spec` on `[-half, half]^2` with `n x n` nodes, then its
 * partial derivatives and their sign changes.
 */
export function scan(spec: string, half: number, n: number, tau: number): Scan;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_scan_free: (a: number, b: number) => void;
    readonly derivative: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly oracle_check: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly scan: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly scan_crossings: (a: number) => [number, number];
    readonly scan_dx_pixels: (a: number) => [number, number];
    readonly scan_dy_pixels: (a: number) => [number, number];
    readonly scan_m_pixels: (a: number) => [number, number];
    readonly scan_n: (a: number) => number;
    readonly scan_summary: (a: number) => [number, number];
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
