/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_run_free: (a: number, b: number) => void;
export const curve_samples: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const filter_bound: (a: number, b: number, c: number) => [number, number, number];
export const filter_response: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const run_goal_radius: (a: number) => number;
export const run_param_dim: (a: number) => number;
export const run_psi: (a: number) => [number, number];
export const run_scenario: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const run_summary: (a: number) => [number, number];
export const run_t: (a: number) => [number, number];
export const run_theta0: (a: number) => [number, number];
export const run_theta_hat: (a: number) => [number, number];
export const scenario_names: () => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
