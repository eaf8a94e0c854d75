/* tslint:disable */
/* eslint-disable */

export class Run {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    goal_radius(): number;
    param_dim(): number;
    psi(): Float64Array;
    summary(): string;
    t(): Float64Array;
    theta0(): Float64Array;
    /**
     * Row-major, `param_dim` values per sample.
     */
    theta_hat(): Float64Array;
}

/**
 * Lifting curve of a two-parameter scenario sampled along `theta0 in [0, s_end]`
 * through the periodic wrap: flattened `(theta0, lambda, eta_0, eta_1)` rows.
 */
export function curve_samples(name: string, s_end: number, n: number): Float64Array;

/**
 * Error bound `|a2 w^2 / a1|` for the sine response.
 */
export function filter_bound(a1: number, a2: number, w: number): number;

/**
 * Filter response to `psi = sin(w t)`: rows of `(t, psi', y)` flattened, over `[0, t_end]`.
 */
export function filter_response(a1: number, a2: number, w: number, t_end: number): Float64Array;

/**
 * Runs a built-in scenario with gain `k` (`delta0` follows as `k eps / 4`), rate `gamma`
 * and a coarser step to stay interactive.
 */
export function run_scenario(name: string, k: number, gamma: number, t_end: number): Run;

export function scenario_names(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_run_free: (a: number, b: number) => void;
    readonly curve_samples: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly filter_bound: (a: number, b: number, c: number) => [number, number, number];
    readonly filter_response: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly run_goal_radius: (a: number) => number;
    readonly run_param_dim: (a: number) => number;
    readonly run_psi: (a: number) => [number, number];
    readonly run_scenario: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly run_summary: (a: number) => [number, number];
    readonly run_t: (a: number) => [number, number];
    readonly run_theta0: (a: number) => [number, number];
    readonly run_theta_hat: (a: number) => [number, number];
    readonly scenario_names: () => [number, number];
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
