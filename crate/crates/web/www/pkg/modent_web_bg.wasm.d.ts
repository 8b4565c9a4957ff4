/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const constants_curve: (a: number, b: number) => [number, number];
export const glue_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const verdict_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
