/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_draw: (a: number, b: number, c: number) => void;
export const demo_feature_maps: (a: number, b: number) => [number, number];
export const demo_input: (a: number, b: number) => [number, number];
export const demo_logits: (a: number, b: number) => [number, number];
export const demo_map_count: (a: number) => number;
export const demo_map_size: (a: number) => number;
export const demo_new: (a: number) => number;
export const demo_size: (a: number) => number;
export const memory_costs: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const stride_check: (a: number, b: number, c: number, d: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
