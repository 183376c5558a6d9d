static unsigned table[256];
void crc_init(void) { for (unsigned i = 0; i < 256; i++) { unsigned c = i; for (int k = 0; k < 8; k++) c = c & 1 ? 0xEDB88320u ^ (c >> 1) : c >> 1; table[i] = c; } }
unsigned crc32(const unsigned char *p, int n) { unsigned c = ~0u; while (n--) c = table[(c ^ *p++) & 0xff] ^ (c >> 8); return ~c; }
unsigned adler32(const unsigned char *p, int n) { unsigned a = 1, b = 0; while (n--) { a = (a + *p++) % 65521; b = (b + a) % 65521; } return (b << 16) | a; }
unsigned long long fnv64(const unsigned char *p, int n) { unsigned long long h = 0xcbf29ce484222325ULL; while (n--) { h ^= *p++; h *= 0x100000001b3ULL; } return h; }
static const unsigned char text[] = "differential testing of webassembly runtimes";
unsigned long long run(void) { crc_init(); return crc32(text, 40) ^ adler32(text, 40) ^ fnv64(text, 40); }
