/* tslint:disable */
/* eslint-disable */

/**
 * Recovers one random sparse signal with l1, IRL1 and SDRL1.
 */
export function compareMethods(n: number, big_n: number, k: number, seed: number): string;

/**
 * `gamma` and `eta` over `alpha in [0, 1]`.
 */
export function constantsCurve(omega: number, a: number, delta_ak: number, delta_a1k: number, points: number): string;

/**
 * Simulated vs closed-form intersection accuracy for `s1 = s0..=k`.
 */
export function intersectionSweep(big_n: number, k: number, s0: number, trials: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compareMethods: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly constantsCurve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly intersectionSweep: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
