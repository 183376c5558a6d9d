unsigned popcount32(unsigned x) { return __builtin_popcount(x); }
unsigned clz32(unsigned x) { return x ? __builtin_clz(x) : 32; }
unsigned long long rotl64(unsigned long long x, int r) { return (x << (r & 63)) | (x >> ((64 - r) & 63)); }
unsigned rotr32(unsigned x, int r) { return (x >> (r & 31)) | (x << ((32 - r) & 31)); }
unsigned bswap(unsigned x) { return __builtin_bswap32(x); }
unsigned long long mix64(unsigned long long z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
int parity(unsigned long long v) { return __builtin_parityll(v); }
unsigned long long run(void) { return mix64(rotl64(0x1234, 7)) ^ bswap(rotr32(0xdeadbeef, 5)) ^ popcount32(0xf0f0) ^ clz32(1234) ^ parity(77); }
