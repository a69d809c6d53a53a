/* tslint:disable */
/* eslint-disable */

/**
 * A randomly initialised equivariant network plus the glyph it is looking at.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Replaces the input with a fresh drawing of glyph `class`.
     */
    draw(_class: number, seed: number): void;
    /**
     * The `4 * groups` maps after the first layer and its ReLU, for the
     * rotated input, concatenated channel by channel.
     */
    feature_maps(turns: number): Float32Array;
    /**
     * The input after `turns` counterclockwise quarter turns, row-major.
     */
    input(turns: number): Float32Array;
    /**
     * Class scores for the rotated input; identical for every `turns`.
     */
    logits(turns: number): Float32Array;
    map_count(): number;
    /**
     * Side length of each map returned by [`Demo::feature_maps`].
     */
    map_size(): number;
    constructor(seed: number);
    size(): number;
}

/**
 * Filter, feature-map and im2col element counts: three numbers for
 * rotating filters followed by three for rotating feature maps.
 */
export function memory_costs(n: number, c_in: number, c_out: number, k: number, w: number, h: number): Float64Array;

/**
 * `[predicted, measured deviation]`: whether the strided geometry should
 * keep equivariance (1 or 0), and the relative gap between `f(Rx)` and the
 * rotated-and-shifted `f(x)` for a random cycle layer.
 */
export function stride_check(size: number, stride: number, kernel: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_draw: (a: number, b: number, c: number) => void;
    readonly demo_feature_maps: (a: number, b: number) => [number, number];
    readonly demo_input: (a: number, b: number) => [number, number];
    readonly demo_logits: (a: number, b: number) => [number, number];
    readonly demo_map_count: (a: number) => number;
    readonly demo_map_size: (a: number) => number;
    readonly demo_new: (a: number) => number;
    readonly demo_size: (a: number) => number;
    readonly memory_costs: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly stride_check: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
