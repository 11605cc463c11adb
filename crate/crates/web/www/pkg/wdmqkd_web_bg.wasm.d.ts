/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_setup_free: (a: number, b: number) => void;
export const setup_channels: (a: number) => [number, number, number, number];
export const setup_gainVsTau: (a: number, b: number) => [number, number, number, number];
export const setup_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => number;
export const setup_optimum: (a: number) => [number, number, number, number];
export const setup_rateVsMu: (a: number, b: number) => [number, number, number, number];
export const setup_spectrum: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
