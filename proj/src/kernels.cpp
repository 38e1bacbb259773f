/* Copyright 2026 The MelGAN-CPP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "melgan/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>

namespace melgan::kernels {
namespace {

std::atomic<int> g_threads{1};

// Register tile: kMr rows of A against kNr columns of B.
constexpr int kMr = 6;
constexpr int kNr = 32;
constexpr int kKc = 256;
constexpr int kMc = 96;
constexpr int kNc = 1024;
// Column strips per parallel task.
constexpr int kStripsPerTask = 4;
// Row count up to which B is read in place instead of packed.
constexpr int kSmallM = 48;

static_assert(kMc % kMr == 0 && kNc % kNr == 0);

using vec16 = float __attribute__((vector_size(64)));

inline vec16 load16(const float* p) {
  vec16 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store16(float* p, vec16 v) { std::memcpy(p, &v, sizeof v); }

// Accumulates a kMr x kNr tile over kc packed steps and writes it to c,
// adding to the existing values when `add` is set.
void micro_kernel(int kc, const float* a, const float* b, float* c,
                  std::ptrdiff_t ldc, bool add) {
  vec16 acc[kMr][2] = {};
  for (int p = 0; p < kc; ++p) {
    const vec16 b0 = load16(b);
    const vec16 b1 = load16(b + 16);
#pragma GCC unroll 6
    for (int i = 0; i < kMr; ++i) {
      const float ai = a[i];
      acc[i][0] += ai * b0;
      acc[i][1] += ai * b1;
    }
    a += kMr;
    b += kNr;
  }
#pragma GCC unroll 6
  for (int i = 0; i < kMr; ++i) {
    float* row = c + i * ldc;
    if (add) {
      store16(row, load16(row) + acc[i][0]);
      store16(row + 16, load16(row + 16) + acc[i][1]);
    } else {
      store16(row, acc[i][0]);
      store16(row + 16, acc[i][1]);
    }
  }
}

// Same tile, reading A rows in place (row i at a + i * lda).
void micro_kernel_rows(int kc, const float* a, std::ptrdiff_t lda, const float* b,
                       float* c, std::ptrdiff_t ldc, bool add) {
  vec16 acc[kMr][2] = {};
  for (int p = 0; p < kc; ++p) {
    const vec16 b0 = load16(b);
    const vec16 b1 = load16(b + 16);
#pragma GCC unroll 6
    for (int i = 0; i < kMr; ++i) {
      const float ai = a[i * lda + p];
      acc[i][0] += ai * b0;
      acc[i][1] += ai * b1;
    }
    b += kNr;
  }
#pragma GCC unroll 6
  for (int i = 0; i < kMr; ++i) {
    float* row = c + i * ldc;
    if (add) {
      store16(row, load16(row) + acc[i][0]);
      store16(row + 16, load16(row + 16) + acc[i][1]);
    } else {
      store16(row, acc[i][0]);
      store16(row + 16, acc[i][1]);
    }
  }
}

void pack_a(const MatA& a, int row0, int rows, int p0, int kc, float* out) {
  for (int ir = 0; ir < rows; ir += kMr) {
    const int mr = std::min(kMr, rows - ir);
    for (int p = 0; p < kc; ++p) {
      for (int i = 0; i < kMr; ++i) {
        float v = 0.0f;
        if (i < mr) {
          const std::ptrdiff_t r = row0 + ir + i;
          const std::ptrdiff_t q = p0 + p;
          v = a.transposed ? a.data[q * a.ld + r] : a.data[r * a.ld + q];
        }
        *out++ = v;
      }
    }
  }
}

void pack_b(const MatB& b, int p0, int kc, int col0, int cols, float* out) {
  for (int jr = 0; jr < cols; jr += kNr) {
    const int nr = std::min(kNr, cols - jr);
    const int c0 = col0 + jr;
    if (!b.by_column) {
      for (int p = 0; p < kc; ++p) {
        const float* src = b.lines[p0 + p] + c0;
        std::memcpy(out, src, sizeof(float) * static_cast<std::size_t>(nr));
        std::fill(out + nr, out + kNr, 0.0f);
        out += kNr;
      }
    } else {
      for (int p = 0; p < kc; ++p) {
        for (int j = 0; j < nr; ++j) out[j] = b.lines[c0 + j][p0 + p];
        std::fill(out + nr, out + kNr, 0.0f);
        out += kNr;
      }
    }
  }
}

// Runs all micro-tiles of one (A block, packed B strip range) pair. A is
// either packed (lda == 0) or read in place with leading dimension lda.
void run_block(const float* a, std::ptrdiff_t lda, int mc, const float* bpack,
               int strip0, int strip1, int nc, int kc, float* c, std::ptrdiff_t ldc,
               int col_base, bool add) {
  alignas(64) float tile[kMr * kNr];
  alignas(64) float arows[kMr * kKc];
  for (int s = strip0; s < strip1; ++s) {
    const int jr = s * kNr;
    const int nr = std::min(kNr, nc - jr);
    const float* bp = bpack + static_cast<std::ptrdiff_t>(s) * kc * kNr;
    for (int ir = 0; ir < mc; ir += kMr) {
      const int mr = std::min(kMr, mc - ir);
      float* cp = c + ir * ldc + col_base + jr;
      const float* ap = lda == 0 ? a + static_cast<std::ptrdiff_t>(ir) * kc : nullptr;
      std::ptrdiff_t ald = lda;
      if (lda != 0) {
        ap = a + ir * lda;
        if (mr < kMr) {
          // Short edge block: copy the live rows and zero the rest.
          std::fill(arows, arows + kMr * kc, 0.0f);
          for (int i = 0; i < mr; ++i)
            std::memcpy(arows + i * kc, ap + i * lda, sizeof(float) * static_cast<std::size_t>(kc));
          ap = arows;
          ald = kc;
        }
      }
      auto kernel = [&](float* dst, std::ptrdiff_t ld, bool acc) {
        if (lda == 0)
          micro_kernel(kc, ap, bp, dst, ld, acc);
        else
          micro_kernel_rows(kc, ap, ald, bp, dst, ld, acc);
      };
      if (mr == kMr && nr == kNr) {
        kernel(cp, ldc, add);
      } else {
        for (int i = 0; i < mr; ++i)
          for (int j = 0; j < nr; ++j)
            tile[i * kNr + j] = add ? cp[i * ldc + j] : 0.0f;
        kernel(tile, kNr, true);
        for (int i = 0; i < mr; ++i)
          for (int j = 0; j < nr; ++j) cp[i * ldc + j] = tile[i * kNr + j];
      }
    }
  }
}

// Tile kernel with B read in place: row p of the strip starts at lines[p] + col.
void micro_kernel_lines(int kc, const float* a, const float* const* lines, std::ptrdiff_t col,
                        float* c, std::ptrdiff_t ldc, bool add) {
  vec16 acc[kMr][2] = {};
  for (int p = 0; p < kc; ++p) {
    const float* bp = lines[p] + col;
    const vec16 b0 = load16(bp);
    const vec16 b1 = load16(bp + 16);
#pragma GCC unroll 6
    for (int i = 0; i < kMr; ++i) {
      const float ai = a[i];
      acc[i][0] += ai * b0;
      acc[i][1] += ai * b1;
    }
    a += kMr;
  }
#pragma GCC unroll 6
  for (int i = 0; i < kMr; ++i) {
    float* row = c + i * ldc;
    if (add) {
      store16(row, load16(row) + acc[i][0]);
      store16(row + 16, load16(row + 16) + acc[i][1]);
    } else {
      store16(row, acc[i][0]);
      store16(row + 16, acc[i][1]);
    }
  }
}

thread_local std::vector<float> t_apack;
thread_local std::vector<float> t_bpack;

// Few output rows: A is packed once over the whole depth and B is read in
// place, so no pass over B is spent on packing.
void gemm_small_m(int m, int n, int k, const MatA& a, const MatB& b, float* c,
                  std::ptrdiff_t ldc, bool accumulate, int threads) {
  const int mp = (m + kMr - 1) / kMr * kMr;
  thread_local std::vector<float> apack;
  if (apack.size() < static_cast<std::size_t>(mp) * k)
    apack.resize(static_cast<std::size_t>(mp) * k);
  pack_a(a, 0, m, 0, k, apack.data());
  const float* ap_all = apack.data();
  const int strips = (n + kNr - 1) / kNr;
  auto run_strip = [&](int s, float* edge) {
    const int jr = s * kNr;
    const int nr = std::min(kNr, n - jr);
    alignas(64) float tile[kMr * kNr];
    if (nr < kNr) {
      for (int p = 0; p < k; ++p) {
        std::memcpy(edge + p * kNr, b.lines[p] + jr, sizeof(float) * static_cast<std::size_t>(nr));
        std::fill(edge + p * kNr + nr, edge + (p + 1) * kNr, 0.0f);
      }
    }
    for (int ir = 0; ir < m; ir += kMr) {
      const int mr = std::min(kMr, m - ir);
      const float* ap = ap_all + static_cast<std::ptrdiff_t>(ir) * k;
      float* cp = c + ir * ldc + jr;
      const bool full = mr == kMr && nr == kNr;
      float* dst = full ? cp : tile;
      const std::ptrdiff_t ld = full ? ldc : kNr;
      bool add = accumulate;
      if (!full) {
        for (int i = 0; i < kMr; ++i)
          for (int j = 0; j < kNr; ++j)
            tile[i * kNr + j] = (accumulate && i < mr && j < nr) ? cp[i * ldc + j] : 0.0f;
        add = true;
      }
      for (int p0 = 0; p0 < k; p0 += kKc) {
        const int kc = std::min(kKc, k - p0);
        const bool acc = add || p0 > 0;
        if (nr < kNr)
          micro_kernel(kc, ap + p0 * kMr, edge + p0 * kNr, dst, ld, acc);
        else
          micro_kernel_lines(kc, ap + p0 * kMr, b.lines + p0, jr, dst, ld, acc);
      }
      if (!full)
        for (int i = 0; i < mr; ++i)
          for (int j = 0; j < nr; ++j) cp[i * ldc + j] = tile[i * kNr + j];
    }
  };
  if (threads == 1) {
    thread_local std::vector<float> edge;
    if (n % kNr != 0 && edge.size() < static_cast<std::size_t>(k) * kNr)
      edge.resize(static_cast<std::size_t>(k) * kNr);
    for (int s = 0; s < strips; ++s) run_strip(s, edge.data());
  } else {
#pragma omp parallel for num_threads(threads) schedule(static)
    for (int s = 0; s < strips; ++s) {
      thread_local std::vector<float> edge;
      if (n % kNr != 0 && edge.size() < static_cast<std::size_t>(k) * kNr)
        edge.resize(static_cast<std::size_t>(k) * kNr);
      run_strip(s, edge.data());
    }
  }
}

}  // namespace

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }
int num_threads() { return g_threads.load(); }

Workspace& thread_workspace() {
  thread_local Workspace ws;
  return ws;
}

namespace {
void gemm_packed(int m, int n, int k, const MatA& a, const MatB& b, float* c,
                 std::ptrdiff_t ldc, bool accumulate);
}  // namespace

void gemm(int m, int n, int k, MatA a, MatB b, float* c, std::ptrdiff_t ldc,
          bool accumulate) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0) {
    if (!accumulate)
      for (int i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0f);
    return;
  }
  if (a.transposed && n <= kNr * 2 && m >= 8 * n) {
    // Narrow product with a transposed A: computing C^T = B^T A^T reads
    // A row by row instead of packing all of it.
    thread_local std::vector<float> bt, ct;
    thread_local std::vector<const float*> alines;
    bt.resize(static_cast<std::size_t>(k) * n);
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < n; ++j)
        bt[static_cast<std::size_t>(p) * n + j] = b.by_column ? b.lines[j][p] : b.lines[p][j];
    alines.resize(static_cast<std::size_t>(k));
    for (int p = 0; p < k; ++p) alines[p] = a.data + p * a.ld;
    ct.resize(static_cast<std::size_t>(n) * m);
    gemm_packed(n, m, k, MatA{bt.data(), n, true}, MatB{alines.data(), false}, ct.data(), m,
                false);
    for (int i = 0; i < m; ++i) {
      float* row = c + i * ldc;
      for (int j = 0; j < n; ++j) {
        const float v = ct[static_cast<std::size_t>(j) * m + i];
        row[j] = accumulate ? row[j] + v : v;
      }
    }
    return;
  }
  if (!b.by_column && m <= kSmallM && n >= 4 * kNr) {
    gemm_small_m(m, n, k, a, b, c, ldc, accumulate, num_threads());
    return;
  }
  gemm_packed(m, n, k, a, b, c, ldc, accumulate);
}

namespace {

void gemm_packed(int m, int n, int k, const MatA& a, const MatB& b, float* c,
                 std::ptrdiff_t ldc, bool accumulate) {
  const int threads = num_threads();
  auto& bpack = t_bpack;
  const std::size_t bneed = static_cast<std::size_t>(kKc) * kNc;
  if (bpack.size() < bneed) bpack.resize(bneed);

  for (int jc = 0; jc < n; jc += kNc) {
    const int nc = std::min(kNc, n - jc);
    const int strips = (nc + kNr - 1) / kNr;
    for (int pc = 0; pc < k; pc += kKc) {
      const int kc = std::min(kKc, k - pc);
      const bool add = accumulate || pc > 0;
      pack_b(b, pc, kc, jc, nc, bpack.data());
      const int mblocks = (m + kMc - 1) / kMc;
      if (threads == 1) {
        auto& apack = t_apack;
        if (apack.size() < static_cast<std::size_t>(kMc) * kKc)
          apack.resize(static_cast<std::size_t>(kMc) * kKc);
        for (int ib = 0; ib < mblocks; ++ib) {
          const int ic = ib * kMc;
          const int mc = std::min(kMc, m - ic);
          if (a.transposed) {
            pack_a(a, ic, mc, pc, kc, apack.data());
            run_block(apack.data(), 0, mc, bpack.data(), 0, strips, nc, kc,
                      c + ic * ldc, ldc, jc, add);
          } else {
            run_block(a.data + ic * a.ld + pc, a.ld, mc, bpack.data(), 0, strips, nc,
                      kc, c + ic * ldc, ldc, jc, add);
          }
        }
      } else {
        const int sgroups = (strips + kStripsPerTask - 1) / kStripsPerTask;
        const int tasks = mblocks * sgroups;
        const float* bp = bpack.data();
#pragma omp parallel for num_threads(threads) schedule(static)
        for (int task = 0; task < tasks; ++task) {
          const int ib = task / sgroups;
          const int sg = task % sgroups;
          const int ic = ib * kMc;
          const int mc = std::min(kMc, m - ic);
          auto& apack = t_apack;
          if (apack.size() < static_cast<std::size_t>(kMc) * kKc)
            apack.resize(static_cast<std::size_t>(kMc) * kKc);
          const int s0 = sg * kStripsPerTask;
          const int s1 = std::min(strips, s0 + kStripsPerTask);
          if (a.transposed) {
            pack_a(a, ic, mc, pc, kc, apack.data());
            run_block(apack.data(), 0, mc, bp, s0, s1, nc, kc, c + ic * ldc, ldc,
                      jc, add);
          } else {
            run_block(a.data + ic * a.ld + pc, a.ld, mc, bp, s0, s1, nc, kc,
                      c + ic * ldc, ldc, jc, add);
          }
        }
      }
    }
  }
}

}  // namespace

namespace {

// Returns the base pointer of the zero-padded input, copying only when
// padding is present.
const float* padded_input(const CorrGeometry& g, const float* x, std::int64_t tin,
                          Workspace& ws) {
  if (g.pad_left == 0 && g.pad_right == 0) return x;
  const std::int64_t tp = tin + g.pad_left + g.pad_right;
  const std::size_t need = static_cast<std::size_t>(g.in_channels * tp);
  if (ws.padded.size() < need) ws.padded.resize(need);
  float* out = ws.padded.data();
  for (int c = 0; c < g.in_channels; ++c) {
    float* row = out + c * tp;
    std::fill(row, row + g.pad_left, 0.0f);
    std::memcpy(row + g.pad_left, x + c * tin, sizeof(float) * static_cast<std::size_t>(tin));
    std::fill(row + g.pad_left + tin, row + tp, 0.0f);
  }
  return out;
}

// Fills ws.lines with one pointer per (channel, tap) row of group `grp`'s
// im2col matrix (each row tout long), materializing strided rows in
// ws.cols.
void im2col_lines(const CorrGeometry& g, const float* src, std::int64_t tp,
                  std::int64_t tout, int grp, Workspace& ws) {
  const int cin_g = g.in_channels / g.groups;
  const int rows = cin_g * g.kernel;
  ws.lines.resize(static_cast<std::size_t>(rows));
  if (g.stride == 1) {
    for (int ci = 0; ci < cin_g; ++ci)
      for (int k = 0; k < g.kernel; ++k)
        ws.lines[ci * g.kernel + k] =
            src + (grp * cin_g + ci) * tp + std::int64_t{k} * g.dilation;
    return;
  }
  const std::size_t need = static_cast<std::size_t>(rows * tout);
  if (ws.cols.size() < need) ws.cols.resize(need);
  for (int ci = 0; ci < cin_g; ++ci) {
    const float* in_row = src + (grp * cin_g + ci) * tp;
    for (int k = 0; k < g.kernel; ++k) {
      float* col = ws.cols.data() + (ci * g.kernel + k) * tout;
      const float* base = in_row + std::int64_t{k} * g.dilation;
      for (std::int64_t t = 0; t < tout; ++t) col[t] = base[t * g.stride];
      ws.lines[ci * g.kernel + k] = col;
    }
  }
}

}  // namespace

void corr_forward(const CorrGeometry& g, const float* x, std::int64_t tin,
                  const float* w, float* y, bool accumulate, Workspace& ws) {
  const std::int64_t tout = g.out_length(tin);
  if (tout <= 0) return;
  const std::int64_t tp = tin + g.pad_left + g.pad_right;
  const float* src = padded_input(g, x, tin, ws);
  const int cout_g = g.out_channels / g.groups;
  const int rows = g.weights_per_output();
  for (int grp = 0; grp < g.groups; ++grp) {
    im2col_lines(g, src, tp, tout, grp, ws);
    gemm(cout_g, static_cast<int>(tout), rows,
         MatA{w + static_cast<std::ptrdiff_t>(grp) * cout_g * rows, rows, false},
         MatB{ws.lines.data(), false}, y + grp * cout_g * tout, tout, accumulate);
  }
}

void corr_input_grad(const CorrGeometry& g, const float* gy, std::int64_t tin,
                     const float* w, float* gx, Workspace& ws) {
  const std::int64_t tout = g.out_length(tin);
  if (tout <= 0) return;
  const int cin_g = g.in_channels / g.groups;
  const int cout_g = g.out_channels / g.groups;
  const int rows = g.weights_per_output();
  const std::size_t need = static_cast<std::size_t>(rows * tout);
  if (ws.cols.size() < need) ws.cols.resize(need);
  float* gcol = ws.cols.data();
  for (int grp = 0; grp < g.groups; ++grp) {
    ws.lines.resize(static_cast<std::size_t>(cout_g));
    for (int o = 0; o < cout_g; ++o) ws.lines[o] = gy + (grp * cout_g + o) * tout;
    gemm(rows, static_cast<int>(tout), cout_g,
         MatA{w + static_cast<std::ptrdiff_t>(grp) * cout_g * rows, rows, true},
         MatB{ws.lines.data(), false}, gcol, tout, false);
    for (int ci = 0; ci < cin_g; ++ci) {
      float* dst = gx + (grp * cin_g + ci) * tin;
      for (int k = 0; k < g.kernel; ++k) {
        const float* src = gcol + (ci * g.kernel + k) * tout;
        const std::int64_t base = std::int64_t{k} * g.dilation - g.pad_left;
        // valid t: 0 <= t*stride + base < tin
        std::int64_t t0 = base >= 0 ? 0 : (-base + g.stride - 1) / g.stride;
        std::int64_t t1 = tin - 1 - base < 0 ? 0 : (tin - 1 - base) / g.stride + 1;
        t1 = std::min(t1, tout);
        if (g.stride == 1) {
          float* d = dst + base;
          for (std::int64_t t = t0; t < t1; ++t) d[t] += src[t];
        } else {
          for (std::int64_t t = t0; t < t1; ++t) dst[t * g.stride + base] += src[t];
        }
      }
    }
  }
}

void corr_weight_grad(const CorrGeometry& g, const float* x, std::int64_t tin,
                      const float* gy, float* gw, Workspace& ws) {
  const std::int64_t tout = g.out_length(tin);
  if (tout <= 0) return;
  const std::int64_t tp = tin + g.pad_left + g.pad_right;
  const float* src = padded_input(g, x, tin, ws);
  const int cout_g = g.out_channels / g.groups;
  const int rows = g.weights_per_output();
  for (int grp = 0; grp < g.groups; ++grp) {
    im2col_lines(g, src, tp, tout, grp, ws);
    gemm(cout_g, rows, static_cast<int>(tout),
         MatA{gy + grp * cout_g * tout, tout, false}, MatB{ws.lines.data(), true},
         gw + static_cast<std::ptrdiff_t>(grp) * cout_g * rows, rows, true);
  }
}

namespace {

// Output length below which batch items are folded into one GEMM.
constexpr std::int64_t kFoldBelow = 256;

bool fold_batch(std::int64_t batch, std::int64_t tout) {
  return batch > 1 && tout < kFoldBelow;
}

// Zero-pads every item into ws.padded ([batch, in, tp]).
const float* padded_batch(const CorrGeometry& g, const float* x, std::int64_t batch,
                          std::int64_t tin, Workspace& ws) {
  if (g.pad_left == 0 && g.pad_right == 0) return x;
  const std::int64_t tp = tin + g.pad_left + g.pad_right;
  const std::size_t need = static_cast<std::size_t>(batch * g.in_channels * tp);
  if (ws.padded.size() < need) ws.padded.resize(need);
  for (std::int64_t r = 0; r < batch * g.in_channels; ++r) {
    float* row = ws.padded.data() + r * tp;
    std::fill(row, row + g.pad_left, 0.0f);
    std::memcpy(row + g.pad_left, x + r * tin, sizeof(float) * static_cast<std::size_t>(tin));
    std::fill(row + g.pad_left + tin, row + tp, 0.0f);
  }
  return ws.padded.data();
}

// im2col of group `grp` over all items into ws.cols as [rows, batch * tout].
void im2col_batch(const CorrGeometry& g, const float* src, std::int64_t batch,
                  std::int64_t tp, std::int64_t tout, int grp, Workspace& ws) {
  const int cin_g = g.in_channels / g.groups;
  const int rows = cin_g * g.kernel;
  const std::int64_t nt = batch * tout;
  const std::size_t need = static_cast<std::size_t>(rows * nt);
  if (ws.cols.size() < need) ws.cols.resize(need);
  ws.lines.resize(static_cast<std::size_t>(rows));
  for (int ci = 0; ci < cin_g; ++ci)
    for (int k = 0; k < g.kernel; ++k) {
      float* col = ws.cols.data() + (ci * g.kernel + k) * nt;
      for (std::int64_t n = 0; n < batch; ++n) {
        const float* base = src + (n * g.in_channels + grp * cin_g + ci) * tp +
                            std::int64_t{k} * g.dilation;
        float* dst = col + n * tout;
        if (g.stride == 1) {
          std::memcpy(dst, base, sizeof(float) * static_cast<std::size_t>(tout));
        } else {
          for (std::int64_t t = 0; t < tout; ++t) dst[t] = base[t * g.stride];
        }
      }
      ws.lines[ci * g.kernel + k] = col;
    }
}

// Gathers rows [grp * cout_g, (grp + 1) * cout_g) of every item of
// y ([batch, out, tout]) into ws.gathered as [cout_g, batch * tout].
void gather_out(const CorrGeometry& g, const float* y, std::int64_t batch,
                std::int64_t tout, int grp, Workspace& ws) {
  const int cout_g = g.out_channels / g.groups;
  const std::int64_t nt = batch * tout;
  const std::size_t need = static_cast<std::size_t>(cout_g * nt);
  if (ws.gathered.size() < need) ws.gathered.resize(need);
  for (int o = 0; o < cout_g; ++o)
    for (std::int64_t n = 0; n < batch; ++n)
      std::memcpy(ws.gathered.data() + o * nt + n * tout,
                  y + (n * g.out_channels + grp * cout_g + o) * tout,
                  sizeof(float) * static_cast<std::size_t>(tout));
}

}  // namespace

void corr_forward_batched(const CorrGeometry& g, const float* x, std::int64_t batch,
                          std::int64_t tin, const float* w, float* y, bool accumulate,
                          Workspace& ws) {
  const std::int64_t tout = g.out_length(tin);
  if (tout <= 0 || batch <= 0) return;
  if (!fold_batch(batch, tout)) {
    for (std::int64_t n = 0; n < batch; ++n)
      corr_forward(g, x + n * g.in_channels * tin, tin, w, y + n * g.out_channels * tout,
                   accumulate, ws);
    return;
  }
  const std::int64_t tp = tin + g.pad_left + g.pad_right;
  const float* src = padded_batch(g, x, batch, tin, ws);
  const int cout_g = g.out_channels / g.groups;
  const int rows = g.weights_per_output();
  const std::int64_t nt = batch * tout;
  const std::size_t need = static_cast<std::size_t>(cout_g * nt);
  if (ws.gathered.size() < need) ws.gathered.resize(need);
  for (int grp = 0; grp < g.groups; ++grp) {
    im2col_batch(g, src, batch, tp, tout, grp, ws);
    gemm(cout_g, static_cast<int>(nt), rows,
         MatA{w + static_cast<std::ptrdiff_t>(grp) * cout_g * rows, rows, false},
         MatB{ws.lines.data(), false}, ws.gathered.data(), nt, false);
    for (int o = 0; o < cout_g; ++o)
      for (std::int64_t n = 0; n < batch; ++n) {
        const float* s = ws.gathered.data() + o * nt + n * tout;
        float* d = y + (n * g.out_channels + grp * cout_g + o) * tout;
        if (accumulate) {
          for (std::int64_t t = 0; t < tout; ++t) d[t] += s[t];
        } else {
          std::memcpy(d, s, sizeof(float) * static_cast<std::size_t>(tout));
        }
      }
  }
}

void corr_input_grad_batched(const CorrGeometry& g, const float* gy, std::int64_t batch,
                             std::int64_t tin, const float* w, float* gx, Workspace& ws) {
  const std::int64_t tout = g.out_length(tin);
  if (tout <= 0 || batch <= 0) return;
  if (!fold_batch(batch, tout)) {
    for (std::int64_t n = 0; n < batch; ++n)
      corr_input_grad(g, gy + n * g.out_channels * tout, tin, w,
                      gx + n * g.in_channels * tin, ws);
    return;
  }
  const int cin_g = g.in_channels / g.groups;
  const int cout_g = g.out_channels / g.groups;
  const int rows = g.weights_per_output();
  const std::int64_t nt = batch * tout;
  const std::size_t need = static_cast<std::size_t>(rows * nt);
  if (ws.cols.size() < need) ws.cols.resize(need);
  float* gcol = ws.cols.data();
  for (int grp = 0; grp < g.groups; ++grp) {
    gather_out(g, gy, batch, tout, grp, ws);
    ws.lines.resize(static_cast<std::size_t>(cout_g));
    for (int o = 0; o < cout_g; ++o) ws.lines[o] = ws.gathered.data() + o * nt;
    gemm(rows, static_cast<int>(nt), cout_g,
         MatA{w + static_cast<std::ptrdiff_t>(grp) * cout_g * rows, rows, true},
         MatB{ws.lines.data(), false}, gcol, nt, false);
    for (std::int64_t n = 0; n < batch; ++n)
      for (int ci = 0; ci < cin_g; ++ci) {
        float* dst = gx + (n * g.in_channels + grp * cin_g + ci) * tin;
        for (int k = 0; k < g.kernel; ++k) {
          const float* src = gcol + (ci * g.kernel + k) * nt + n * tout;
          const std::int64_t base = std::int64_t{k} * g.dilation - g.pad_left;
          std::int64_t t0 = base >= 0 ? 0 : (-base + g.stride - 1) / g.stride;
          std::int64_t t1 = tin - 1 - base < 0 ? 0 : (tin - 1 - base) / g.stride + 1;
          t1 = std::min(t1, tout);
          for (std::int64_t t = t0; t < t1; ++t) dst[t * g.stride + base] += src[t];
        }
      }
  }
}

void corr_weight_grad_batched(const CorrGeometry& g, const float* x, std::int64_t batch,
                              std::int64_t tin, const float* gy, float* gw, Workspace& ws) {
  const std::int64_t tout = g.out_length(tin);
  if (tout <= 0 || batch <= 0) return;
  if (!fold_batch(batch, tout)) {
    for (std::int64_t n = 0; n < batch; ++n)
      corr_weight_grad(g, x + n * g.in_channels * tin, tin, gy + n * g.out_channels * tout,
                       gw, ws);
    return;
  }
  const std::int64_t tp = tin + g.pad_left + g.pad_right;
  const float* src = padded_batch(g, x, batch, tin, ws);
  const int cout_g = g.out_channels / g.groups;
  const int rows = g.weights_per_output();
  const std::int64_t nt = batch * tout;
  for (int grp = 0; grp < g.groups; ++grp) {
    im2col_batch(g, src, batch, tp, tout, grp, ws);
    gather_out(g, gy, batch, tout, grp, ws);
    gemm(cout_g, rows, static_cast<int>(nt), MatA{ws.gathered.data(), nt, false},
         MatB{ws.lines.data(), true}, gw + static_cast<std::ptrdiff_t>(grp) * cout_g * rows,
         rows, true);
  }
}

namespace {
// Mirror reflection without repeating the edge sample, continued
// periodically (period 2 * (n - 1)) when the index runs past a full
// reflection. A single-sample signal extends as a constant.
inline std::int64_t mirror(std::int64_t i, std::int64_t n) {
  if (i >= 0 && i < n) return i;
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  std::int64_t m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}
}  // namespace

void reflect_pad(const float* x, std::int64_t channels, std::int64_t time, int pad,
                 float* out) {
  const std::int64_t tp = time + 2 * pad;
  for (std::int64_t c = 0; c < channels; ++c) {
    const float* src = x + c * time;
    float* dst = out + c * tp;
    for (int i = 0; i < pad; ++i) dst[i] = src[mirror(i - pad, time)];
    std::memcpy(dst + pad, src, sizeof(float) * static_cast<std::size_t>(time));
    for (int i = 0; i < pad; ++i) dst[pad + time + i] = src[mirror(time + i, time)];
  }
}

void reflect_pad_adjoint(const float* gp, std::int64_t channels, std::int64_t time,
                         int pad, float* gx) {
  const std::int64_t tp = time + 2 * pad;
  for (std::int64_t c = 0; c < channels; ++c) {
    const float* src = gp + c * tp;
    float* dst = gx + c * time;
    for (std::int64_t t = 0; t < time; ++t) dst[t] += src[pad + t];
    for (int i = 0; i < pad; ++i) dst[mirror(i - pad, time)] += src[i];
    for (int i = 0; i < pad; ++i) dst[mirror(time + i, time)] += src[pad + time + i];
  }
}

double dot_f64(const float* a, const float* b, std::int64_t n) {
  using vec8d = double __attribute__((vector_size(64)));
  using vec8f = float __attribute__((vector_size(32)));
  vec8d acc0 = {}, acc1 = {};
  std::int64_t i = 0;
  for (; i + 16 <= n; i += 16) {
    vec8f a0, a1, b0, b1;
    std::memcpy(&a0, a + i, sizeof a0);
    std::memcpy(&a1, a + i + 8, sizeof a1);
    std::memcpy(&b0, b + i, sizeof b0);
    std::memcpy(&b1, b + i + 8, sizeof b1);
    acc0 += __builtin_convertvector(a0, vec8d) * __builtin_convertvector(b0, vec8d);
    acc1 += __builtin_convertvector(a1, vec8d) * __builtin_convertvector(b1, vec8d);
  }
  acc0 += acc1;
  double s = 0.0;
  for (int j = 0; j < 8; ++j) s += acc0[j];
  for (; i < n; ++i) s += double{a[i]} * b[i];
  return s;
}

bool weight_norm(const float* v, const float* g, std::int64_t dim0,
                 std::int64_t dim1, std::int64_t dim2, int channel_axis, float* w,
                 std::vector<double>* norms) {
  const std::int64_t channels = channel_axis == 0 ? dim0 : dim1;
  thread_local std::vector<double> local;
  std::vector<double>& n = norms ? *norms : local;
  n.assign(static_cast<std::size_t>(channels), 0.0);
  if (channel_axis == 0) {
    // Each output channel is one contiguous block; normalize it while it
    // is still in cache.
    const std::int64_t len = dim1 * dim2;
    for (std::int64_t c = 0; c < dim0; ++c) {
      const float* src = v + c * len;
      const double sq = dot_f64(src, src, len);
      if (!(sq > 0.0)) return false;
      n[c] = std::sqrt(sq);
      const float scale = static_cast<float>(double{g[c]} / n[c]);
      float* dst = w + c * len;
      for (std::int64_t k = 0; k < len; ++k) dst[k] = scale * src[k];
    }
    return true;
  }
  for (std::int64_t a = 0; a < dim0; ++a)
    for (std::int64_t b = 0; b < dim1; ++b) {
      const float* row = v + (a * dim1 + b) * dim2;
      n[b] += dot_f64(row, row, dim2);
    }
  for (auto& x : n) {
    if (!(x > 0.0)) return false;
    x = std::sqrt(x);
  }
  for (std::int64_t a = 0; a < dim0; ++a)
    for (std::int64_t b = 0; b < dim1; ++b) {
      const float scale = static_cast<float>(double{g[b]} / n[b]);
      const std::int64_t off = (a * dim1 + b) * dim2;
      for (std::int64_t k = 0; k < dim2; ++k) w[off + k] = scale * v[off + k];
    }
  return true;
}

void weight_norm_backward(const float* v, const float* g, const float* gw,
                          const std::vector<double>& norms, std::int64_t dim0,
                          std::int64_t dim1, std::int64_t dim2, int channel_axis,
                          float* gv, float* gg) {
  auto update = [&](std::int64_t ch, double dot, std::int64_t off, std::int64_t len) {
    const double n = norms[static_cast<std::size_t>(ch)];
    const float s1 = static_cast<float>(g[ch] / n);
    const float s2 = static_cast<float>(g[ch] * dot / (n * n * n));
    for (std::int64_t k = 0; k < len; ++k) gv[off + k] += s1 * gw[off + k] - s2 * v[off + k];
  };
  if (channel_axis == 0) {
    const std::int64_t len = dim1 * dim2;
    for (std::int64_t c = 0; c < dim0; ++c) {
      const double dot = dot_f64(gw + c * len, v + c * len, len);
      if (gg) gg[c] += static_cast<float>(dot / norms[static_cast<std::size_t>(c)]);
      if (gv) update(c, dot, c * len, len);
    }
    return;
  }
  std::vector<double> dot(static_cast<std::size_t>(dim1), 0.0);
  for (std::int64_t a = 0; a < dim0; ++a)
    for (std::int64_t b = 0; b < dim1; ++b) {
      const std::int64_t off = (a * dim1 + b) * dim2;
      dot[b] += dot_f64(gw + off, v + off, dim2);
    }
  if (gg)
    for (std::int64_t b = 0; b < dim1; ++b) gg[b] += static_cast<float>(dot[b] / norms[b]);
  if (gv)
    for (std::int64_t a = 0; a < dim0; ++a)
      for (std::int64_t b = 0; b < dim1; ++b) update(b, dot[b], (a * dim1 + b) * dim2, dim2);
}

}  // namespace melgan::kernels
