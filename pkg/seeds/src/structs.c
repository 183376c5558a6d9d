struct vec3 { float x, y, z; };
struct particle { struct vec3 pos, vel; int alive; };
static struct particle ps[16];
float dot(struct vec3 a, struct vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
struct vec3 cross(struct vec3 a, struct vec3 b) { struct vec3 r = { a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x }; return r; }
void step(float dt) {
  for (int i = 0; i < 16; i++) {
    if (!ps[i].alive) continue;
    ps[i].pos.x += ps[i].vel.x * dt; ps[i].pos.y += ps[i].vel.y * dt; ps[i].pos.z += ps[i].vel.z * dt;
    if (ps[i].pos.y < 0) ps[i].alive = 0;
  }
}
void init(void) { for (int i = 0; i < 16; i++) { ps[i].pos = (struct vec3){ (float)i, 10, 0 }; ps[i].vel = (struct vec3){ 1, -(float)i, 0.5f }; ps[i].alive = 1; } }
float run(void) { init(); for (int k = 0; k < 5; k++) step(0.5f); struct vec3 c = cross(ps[1].pos, ps[2].vel); return dot(c, ps[3].pos); }
