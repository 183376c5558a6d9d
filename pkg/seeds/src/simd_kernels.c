#include <wasm_simd128.h>
static float xs[64], ys[64];
static int is[64];
float dotv(int n) { v128_t acc = wasm_f32x4_splat(0); for (int i = 0; i + 4 <= n; i += 4) acc = wasm_f32x4_add(acc, wasm_f32x4_mul(wasm_v128_load(xs + i), wasm_v128_load(ys + i))); return wasm_f32x4_extract_lane(acc, 0) + wasm_f32x4_extract_lane(acc, 1) + wasm_f32x4_extract_lane(acc, 2) + wasm_f32x4_extract_lane(acc, 3); }
int sumi(int n) { v128_t acc = wasm_i32x4_splat(0); for (int i = 0; i + 4 <= n; i += 4) acc = wasm_i32x4_add(acc, wasm_v128_load(is + i)); acc = wasm_i32x4_add(acc, wasm_i32x4_shuffle(acc, acc, 2, 3, 0, 1)); return wasm_i32x4_extract_lane(acc, 0) + wasm_i32x4_extract_lane(acc, 1); }
int maxi(int n) { v128_t m = wasm_i32x4_splat(-2147483647 - 1); for (int i = 0; i + 4 <= n; i += 4) m = wasm_i32x4_max(m, wasm_v128_load(is + i)); return wasm_i32x4_extract_lane(m, 0) ^ wasm_i32x4_extract_lane(m, 3); }
int bytes_eq(void) { v128_t a = wasm_i8x16_splat(3), b = wasm_i8x16_shl(a, 9); return wasm_i8x16_bitmask(wasm_i8x16_eq(a, b)) + wasm_i8x16_extract_lane(b, 0); }
float run(void) { for (int i = 0; i < 64; i++) { xs[i] = (float)i; ys[i] = 1.0f / (float)(i + 1); is[i] = i * (i & 1 ? -3 : 5); } return dotv(64) + (float)sumi(64) + (float)maxi(64) + (float)bytes_eq(); }
