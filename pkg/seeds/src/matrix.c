static float A[8][8], B[8][8], C[8][8];
void setup(void) { for (int i = 0; i < 8; i++) for (int j = 0; j < 8; j++) { A[i][j] = (float)(i + j); B[i][j] = (float)(i - j); } }
void matmul(void) {
  for (int i = 0; i < 8; i++) for (int j = 0; j < 8; j++) { float s = 0; for (int k = 0; k < 8; k++) s += A[i][k] * B[k][j]; C[i][j] = s; }
}
float trace(void) { float t = 0; for (int i = 0; i < 8; i++) t += C[i][i]; return t; }
void transpose(void) { for (int i = 0; i < 8; i++) for (int j = i + 1; j < 8; j++) { float t = C[i][j]; C[i][j] = C[j][i]; C[j][i] = t; } }
float run(void) { setup(); matmul(); transpose(); return trace() + C[1][2]; }
