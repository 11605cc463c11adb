/* tslint:disable */
/* eslint-disable */

export class Setup {
    free(): void;
    [Symbol.dispose](): void;
    channels(): Float64Array;
    gainVsTau(points: number): Float64Array;
    constructor(sigma_cr: number, tau_p: number, n_pairs: number, positive: boolean, gauss: boolean, width_hz: number, t: number, thermal: boolean);
    optimum(): Float64Array;
    rateVsMu(points: number): Float64Array;
    spectrum(pixels: number, extent: number): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_setup_free: (a: number, b: number) => void;
    readonly setup_channels: (a: number) => [number, number, number, number];
    readonly setup_gainVsTau: (a: number, b: number) => [number, number, number, number];
    readonly setup_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => number;
    readonly setup_optimum: (a: number) => [number, number, number, number];
    readonly setup_rateVsMu: (a: number, b: number) => [number, number, number, number];
    readonly setup_spectrum: (a: number, b: number, c: number) => [number, number, number, number];
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
