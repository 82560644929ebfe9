/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    atlas_height(): number;
    atlas_width(): number;
    /**
     * Adds both eyes of the current view to the exposure counts, one
     * observation per color per tile. Returns the number of tiles counted so far.
     */
    capture(): number;
    /**
     * Heatmap of the atlas corner as RGBA: plasma(count / max) on owned
     * texels, black elsewhere.
     */
    heatmap(): Uint8Array;
    height(): number;
    constructor();
    /**
     * Describes the pixel under (x, y) of the last rendered view.
     */
    pick(x: number, y: number, right_eye: boolean): string;
    /**
     * Places the vehicle `distance` meters ahead of the viewer, turned by
     * `yaw_deg`, renders both eyes and returns the chosen eye as RGBA.
     */
    render(yaw_deg: number, distance: number, right_eye: boolean): Uint8Array;
    reset(): void;
    width(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_atlas_height: (a: number) => number;
    readonly demo_atlas_width: (a: number) => number;
    readonly demo_capture: (a: number) => [number, number, number];
    readonly demo_heatmap: (a: number) => [number, number, number, number];
    readonly demo_height: (a: number) => number;
    readonly demo_new: () => [number, number, number];
    readonly demo_pick: (a: number, b: number, c: number, d: number) => [number, number];
    readonly demo_render: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_reset: (a: number) => void;
    readonly demo_width: (a: number) => number;
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
