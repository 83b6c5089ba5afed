// Copyright 2026 The Blindspot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "blindspot/nn/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <fmt/format.h>

#include "blindspot/error.hpp"

namespace blindspot::nn {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    fail(ErrorCode::kValidation, fmt::format("tensor data size {} does not match shape {}",
                                             data_.size(), shape_string(shape_)));
  }
}

std::span<const double> Tensor::row(std::size_t i) const {
  const std::size_t cols = shape_.empty() ? 0 : data_.size() / static_cast<std::size_t>(shape_[0]);
  return std::span<const double>(data_).subspan(i * cols, cols);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    fail(ErrorCode::kValidation,
         fmt::format("cannot reshape {} to {}", shape_string(shape_), shape_string(shape)));
  }
  return Tensor(std::move(shape), data_);
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Var::grad() const {
  if (has_grad()) return node_->grad;
  return Tensor(node_->value.shape(), 0.0);
}

void Var::backward() {
  if (node_->value.size() != 1) {
    fail(ErrorCode::kValidation, "backward() needs a scalar output");
  }
  if (!node_->requires_grad) return;
  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.size() == n->value.size()) n->backward_fn(*n);
  }
}

Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn) {
  Var out(std::move(value), false);
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (any) {
    auto& node = *out.node();
    node.requires_grad = true;
    for (auto& in : inputs) node.parents.push_back(in.node());
    node.backward_fn = std::move(backward_fn);
  }
  return out;
}

namespace {

void check(bool ok, const char* op, const std::string& detail) {
  if (!ok) fail(ErrorCode::kValidation, fmt::format("{}: {}", op, detail));
}

// c[m,n] += a[m,k] * b[k,n]
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[m,k] += a[m,n] * b[k,n]^T
void gemm_nt(const double* a, const double* b, double* c, int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * n;
    double* ci = c + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double* bp = b + static_cast<std::size_t>(p) * n;
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += ai[j] * bp[j];
      ci[p] += s;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    const double* bi = b + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.size());
  if (z.empty()) return p;
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - mx);
    s += p[i];
  }
  for (auto& v : p) v /= s;
  return p;
}

Var matmul(const Var& a, const Var& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  check(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0), "matmul",
        shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  const int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n}, 0.0);
  gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
  return make_op(std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) gemm_nt(self.grad.data(), pb.value.data(), pa.grad_buffer().data(), m, n, k);
    if (pb.requires_grad) gemm_tn(pa.value.data(), self.grad.data(), pb.grad_buffer().data(), m, k, n);
  });
}

Var add_bias(const Var& x, const Var& bias) {
  const auto& xv = x.value();
  check(xv.rank() == 2 && bias.value().size() == static_cast<std::size_t>(xv.dim(1)), "add_bias",
        shape_string(xv.shape()) + " + " + shape_string(bias.shape()));
  const int m = xv.dim(0), n = xv.dim(1);
  Tensor out = xv;
  const double* b = bias.value().data();
  for (int i = 0; i < m; ++i) {
    double* r = out.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) r[j] += b[j];
  }
  return make_op(std::move(out), {x, bias}, [m, n](Node& self) {
    Node& px = parent(self, 0);
    Node& pb = parent(self, 1);
    const double* g = self.grad.data();
    if (px.requires_grad) {
      double* gx = px.grad_buffer().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += g[i];
    }
    if (pb.requires_grad) {
      double* gb = pb.grad_buffer().data();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) gb[j] += g[static_cast<std::size_t>(i) * n + j];
      }
    }
  });
}

Var add(const Var& a, const Var& b) {
  check(a.shape() == b.shape(), "add", shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      Node& n = parent(self, p);
      if (!n.requires_grad) continue;
      double* g = n.grad_buffer().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) { return add(a, scale(b, -1.0)); }

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= s;
  return make_op(std::move(out), {a}, [s](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += s * self.grad[i];
  });
}

Var relu(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return make_op(std::move(out), {x}, [](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (self.value[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Var tanh(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = std::tanh(v);
  return make_op(std::move(out), {x}, [](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double t = self.value[i];
      g[i] += (1.0 - t * t) * self.grad[i];
    }
  });
}

Var sigmoid(const Var& x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return make_op(std::move(out), {x}, [](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double s = self.value[i];
      g[i] += s * (1.0 - s) * self.grad[i];
    }
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return make_op(Tensor({1}, s), {x}, [](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    const std::size_t n = parent(self, 0).value.size();
    for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0];
  });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var channel_affine(const Var& x, std::span<const double> sc, std::span<const double> sh) {
  const auto& xv = x.value();
  check(xv.rank() == 4 && static_cast<std::size_t>(xv.dim(1)) == sc.size() && sc.size() == sh.size(),
        "channel_affine", shape_string(xv.shape()));
  const int n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  Tensor out = xv;
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      double* p = out.data() + (static_cast<std::size_t>(i) * c + ch) * hw;
      for (int j = 0; j < hw; ++j) p[j] = p[j] * sc[ch] + sh[ch];
    }
  }
  std::vector<double> scv(sc.begin(), sc.end());
  return make_op(std::move(out), {x}, [n, c, hw, scv](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * hw;
        for (int j = 0; j < hw; ++j) g[off + j] += scv[ch] * self.grad[off + j];
      }
    }
  });
}

Var conv2d_same(const Var& x, const Var& weight, const Var& bias) {
  const auto& xv = x.value();
  const auto& wv = weight.value();
  check(xv.rank() == 4 && wv.rank() == 4 && wv.dim(1) == xv.dim(1) && wv.dim(2) == wv.dim(3) &&
            wv.dim(2) % 2 == 1 && bias.value().size() == static_cast<std::size_t>(wv.dim(0)),
        "conv2d", shape_string(xv.shape()) + " * " + shape_string(wv.shape()));
  const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const int o = wv.dim(0), k = wv.dim(2), r = k / 2;
  Tensor out({n, o, h, w}, 0.0);
  const double* X = xv.data();
  const double* W = wv.data();
  const double* B = bias.value().data();
  double* Y = out.data();
  for (int b = 0; b < n; ++b) {
    for (int oc = 0; oc < o; ++oc) {
      double* y = Y + (static_cast<std::size_t>(b) * o + oc) * h * w;
      for (int i = 0; i < h * w; ++i) y[i] = B[oc];
      for (int ic = 0; ic < c; ++ic) {
        const double* xi = X + (static_cast<std::size_t>(b) * c + ic) * h * w;
        const double* wk = W + (static_cast<std::size_t>(oc) * c + ic) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          const int dy = ky - r;
          const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
          for (int kx = 0; kx < k; ++kx) {
            const int dx = kx - r;
            const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
            const double wt = wk[ky * k + kx];
            for (int yy = y0; yy < y1; ++yy) {
              double* yr = y + yy * w;
              const double* xr = xi + (yy + dy) * w + dx;
              for (int xx = x0; xx < x1; ++xx) yr[xx] += wt * xr[xx];
            }
          }
        }
      }
    }
  }
  return make_op(std::move(out), {x, weight, bias}, [n, c, h, w, o, k, r](Node& self) {
    Node& px = parent(self, 0);
    Node& pw = parent(self, 1);
    Node& pb = parent(self, 2);
    const double* G = self.grad.data();
    const double* X = px.value.data();
    const double* W = pw.value.data();
    double* GX = px.requires_grad ? px.grad_buffer().data() : nullptr;
    double* GW = pw.requires_grad ? pw.grad_buffer().data() : nullptr;
    double* GB = pb.requires_grad ? pb.grad_buffer().data() : nullptr;
    for (int b = 0; b < n; ++b) {
      for (int oc = 0; oc < o; ++oc) {
        const double* g = G + (static_cast<std::size_t>(b) * o + oc) * h * w;
        if (GB) {
          double s = 0.0;
          for (int i = 0; i < h * w; ++i) s += g[i];
          GB[oc] += s;
        }
        for (int ic = 0; ic < c; ++ic) {
          const std::size_t xoff = (static_cast<std::size_t>(b) * c + ic) * h * w;
          const std::size_t woff = (static_cast<std::size_t>(oc) * c + ic) * k * k;
          for (int ky = 0; ky < k; ++ky) {
            const int dy = ky - r;
            const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
            for (int kx = 0; kx < k; ++kx) {
              const int dx = kx - r;
              const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
              if (GW) {
                double s = 0.0;
                for (int yy = y0; yy < y1; ++yy) {
                  const double* gr = g + yy * w;
                  const double* xr = X + xoff + (yy + dy) * w + dx;
                  for (int xx = x0; xx < x1; ++xx) s += gr[xx] * xr[xx];
                }
                GW[woff + ky * k + kx] += s;
              }
              if (GX) {
                const double wt = W[woff + ky * k + kx];
                for (int yy = y0; yy < y1; ++yy) {
                  const double* gr = g + yy * w;
                  double* gxr = GX + xoff + (yy + dy) * w + dx;
                  for (int xx = x0; xx < x1; ++xx) gxr[xx] += wt * gr[xx];
                }
              }
            }
          }
        }
      }
    }
  });
}

Var maxpool2(const Var& x) {
  const auto& xv = x.value();
  check(xv.rank() == 4 && xv.dim(2) % 2 == 0 && xv.dim(3) % 2 == 0, "maxpool2",
        shape_string(xv.shape()));
  const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const int oh = h / 2, ow = w / 2;
  Tensor out({n, c, oh, ow}, 0.0);
  std::vector<std::size_t> arg(out.size());
  std::size_t idx = 0;
  for (int p = 0; p < n * c; ++p) {
    const std::size_t base = static_cast<std::size_t>(p) * h * w;
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx, ++idx) {
        std::size_t best = base + (2 * y) * w + 2 * xx;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t j = base + (2 * y + dy) * w + 2 * xx + dx;
            if (xv[j] > xv[best]) best = j;
          }
        }
        out[idx] = xv[best];
        arg[idx] = best;
      }
    }
  }
  return make_op(std::move(out), {x}, [arg = std::move(arg)](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (std::size_t i = 0; i < arg.size(); ++i) g[arg[i]] += self.grad[i];
  });
}

Var flatten(const Var& x) {
  const auto& xv = x.value();
  const int n = xv.dim(0);
  const int rest = static_cast<int>(xv.size() / static_cast<std::size_t>(n));
  return make_op(xv.reshaped({n, rest}), {x}, [](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Var reshape(const Var& x, Shape shape) {
  return make_op(x.value().reshaped(std::move(shape)), {x}, [](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Var patchify(const Var& x, int p) {
  const auto& xv = x.value();
  check(xv.rank() == 4 && xv.dim(2) % p == 0 && xv.dim(3) % p == 0, "patchify",
        shape_string(xv.shape()));
  const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const int gh = h / p, gw = w / p, t = gh * gw, d = c * p * p;
  Tensor out({n * t, d}, 0.0);
  std::vector<std::size_t> src(out.size());
  std::size_t o = 0;
  for (int b = 0; b < n; ++b) {
    for (int ty = 0; ty < gh; ++ty) {
      for (int tx = 0; tx < gw; ++tx) {
        for (int ch = 0; ch < c; ++ch) {
          for (int py = 0; py < p; ++py) {
            for (int px = 0; px < p; ++px, ++o) {
              src[o] = ((static_cast<std::size_t>(b) * c + ch) * h + ty * p + py) * w + tx * p + px;
              out[o] = xv[src[o]];
            }
          }
        }
      }
    }
  }
  return make_op(std::move(out), {x}, [src = std::move(src)](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (std::size_t i = 0; i < src.size(); ++i) g[src[i]] += self.grad[i];
  });
}

Var add_positional(const Var& tokens, const Var& pos) {
  const auto& tv = tokens.value();
  const auto& pv = pos.value();
  check(tv.rank() == 2 && pv.rank() == 2 && tv.dim(1) == pv.dim(1) && tv.dim(0) % pv.dim(0) == 0,
        "add_positional", shape_string(tv.shape()) + " + " + shape_string(pv.shape()));
  const std::size_t block = pv.size();
  Tensor out = tv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += pv[i % block];
  return make_op(std::move(out), {tokens, pos}, [block](Node& self) {
    Node& pt = parent(self, 0);
    Node& pp = parent(self, 1);
    if (pt.requires_grad) {
      double* g = pt.grad_buffer().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (pp.requires_grad) {
      double* g = pp.grad_buffer().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % block] += self.grad[i];
    }
  });
}

Var self_attention(const Var& q, const Var& k, const Var& v, int t) {
  const auto& qv = q.value();
  check(qv.rank() == 2 && qv.shape() == k.shape() && qv.shape() == v.shape() && qv.dim(0) % t == 0,
        "self_attention", shape_string(qv.shape()));
  const int n = qv.dim(0) / t, d = qv.dim(1);
  const double inv = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor out(qv.shape(), 0.0);
  std::vector<double> attn(static_cast<std::size_t>(n) * t * t);
  for (int b = 0; b < n; ++b) {
    const std::size_t off = static_cast<std::size_t>(b) * t * d;
    double* a = attn.data() + static_cast<std::size_t>(b) * t * t;
    std::fill(a, a + t * t, 0.0);
    gemm_nt(qv.data() + off, k.value().data() + off, a, t, d, t);
    for (int i = 0; i < t; ++i) {
      double* row = a + i * t;
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < t; ++j) mx = std::max(mx, row[j] * inv);
      double s = 0.0;
      for (int j = 0; j < t; ++j) {
        row[j] = std::exp(row[j] * inv - mx);
        s += row[j];
      }
      for (int j = 0; j < t; ++j) row[j] /= s;
    }
    gemm_nn(a, v.value().data() + off, out.data() + off, t, t, d);
  }
  return make_op(std::move(out), {q, k, v}, [n, t, d, inv, attn = std::move(attn)](Node& self) {
    Node& pq = parent(self, 0);
    Node& pk = parent(self, 1);
    Node& pv = parent(self, 2);
    std::vector<double> da(static_cast<std::size_t>(t) * t);
    for (int b = 0; b < n; ++b) {
      const std::size_t off = static_cast<std::size_t>(b) * t * d;
      const double* a = attn.data() + static_cast<std::size_t>(b) * t * t;
      const double* g = self.grad.data() + off;
      if (pv.requires_grad) gemm_tn(a, g, pv.grad_buffer().data() + off, t, t, d);
      std::fill(da.begin(), da.end(), 0.0);
      gemm_nt(g, pv.value.data() + off, da.data(), t, d, t);
      // softmax backward, then the 1/sqrt(d) scale
      for (int i = 0; i < t; ++i) {
        double dot = 0.0;
        for (int j = 0; j < t; ++j) dot += da[i * t + j] * a[i * t + j];
        for (int j = 0; j < t; ++j) da[i * t + j] = a[i * t + j] * (da[i * t + j] - dot) * inv;
      }
      if (pq.requires_grad) gemm_nn(da.data(), pk.value.data() + off, pq.grad_buffer().data() + off, t, t, d);
      if (pk.requires_grad) gemm_tn(da.data(), pq.value.data() + off, pk.grad_buffer().data() + off, t, t, d);
    }
  });
}

Var layer_norm(const Var& x, double eps) {
  const auto& xv = x.value();
  check(xv.rank() == 2, "layer_norm", shape_string(xv.shape()));
  const int m = xv.dim(0), d = xv.dim(1);
  Tensor out = xv;
  std::vector<double> inv_std(m);
  for (int i = 0; i < m; ++i) {
    double* r = out.data() + static_cast<std::size_t>(i) * d;
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += r[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (r[j] - mu) * (r[j] - mu);
    var /= d;
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < d; ++j) r[j] = (r[j] - mu) * inv_std[i];
  }
  return make_op(std::move(out), {x}, [m, d, inv_std = std::move(inv_std)](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (int i = 0; i < m; ++i) {
      const double* gy = self.grad.data() + static_cast<std::size_t>(i) * d;
      const double* y = self.value.data() + static_cast<std::size_t>(i) * d;
      double mg = 0.0, mgy = 0.0;
      for (int j = 0; j < d; ++j) {
        mg += gy[j];
        mgy += gy[j] * y[j];
      }
      mg /= d;
      mgy /= d;
      double* gx = g + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) gx[j] += inv_std[i] * (gy[j] - mg - y[j] * mgy);
    }
  });
}

Var token_mean(const Var& x, int t) {
  const auto& xv = x.value();
  check(xv.rank() == 2 && xv.dim(0) % t == 0, "token_mean", shape_string(xv.shape()));
  const int n = xv.dim(0) / t, d = xv.dim(1);
  Tensor out({n, d}, 0.0);
  for (int b = 0; b < n; ++b) {
    for (int i = 0; i < t; ++i) {
      const double* r = xv.data() + (static_cast<std::size_t>(b) * t + i) * d;
      for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(b) * d + j] += r[j] / t;
    }
  }
  return make_op(std::move(out), {x}, [n, t, d](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (int b = 0; b < n; ++b) {
      for (int i = 0; i < t; ++i) {
        double* r = g + (static_cast<std::size_t>(b) * t + i) * d;
        for (int j = 0; j < d; ++j) r[j] += self.grad[static_cast<std::size_t>(b) * d + j] / t;
      }
    }
  });
}

Var cross_entropy(const Var& logits, std::span<const int> labels) {
  const auto& z = logits.value();
  check(z.rank() == 2 && static_cast<std::size_t>(z.dim(0)) == labels.size(), "cross_entropy",
        shape_string(z.shape()));
  const int n = z.dim(0), k = z.dim(1);
  Tensor probs({n, k}, 0.0);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    check(labels[i] >= 0 && labels[i] < k, "cross_entropy", "label out of range");
    const auto p = softmax(z.row(i));
    std::copy(p.begin(), p.end(), probs.data() + static_cast<std::size_t>(i) * k);
    loss -= std::log(std::max(p[labels[i]], std::numeric_limits<double>::min()));
  }
  std::vector<int> y(labels.begin(), labels.end());
  return make_op(Tensor({1}, loss / n), {logits}, [n, k, y, probs = std::move(probs)](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    const double s = self.grad[0] / n;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        const std::size_t at = static_cast<std::size_t>(i) * k + j;
        g[at] += s * (probs[at] - (j == y[i] ? 1.0 : 0.0));
      }
    }
  });
}

Var distillation_kl(const Var& logits, const Tensor& target_logits, double temperature) {
  const auto& z = logits.value();
  check(z.shape() == target_logits.shape() && z.rank() == 2, "distillation_kl",
        shape_string(z.shape()) + " vs " + shape_string(target_logits.shape()));
  check(temperature > 0.0, "distillation_kl", "temperature must be > 0");
  const int n = z.dim(0), k = z.dim(1);
  const double tt = temperature;
  Tensor pr({n, k}, 0.0), pe({n, k}, 0.0);
  double loss = 0.0;
  std::vector<double> buf(k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) buf[j] = z.row(i)[j] / tt;
    const auto r = softmax(buf);
    for (int j = 0; j < k; ++j) buf[j] = target_logits.row(i)[j] / tt;
    const auto e = softmax(buf);
    // log-softmax through logsumexp for stability
    double kl = 0.0;
    auto lse = [&](std::span<const double> row) {
      double mx = -std::numeric_limits<double>::infinity();
      for (double v : row) mx = std::max(mx, v / tt);
      double s = 0.0;
      for (double v : row) s += std::exp(v / tt - mx);
      return mx + std::log(s);
    };
    const double lse_r = lse(z.row(i));
    const double lse_e = lse(target_logits.row(i));
    for (int j = 0; j < k; ++j) {
      if (e[j] <= 0.0) continue;
      const double log_e = target_logits.row(i)[j] / tt - lse_e;
      const double log_r = z.row(i)[j] / tt - lse_r;
      kl += e[j] * (log_e - log_r);
    }
    loss += kl;
    std::copy(r.begin(), r.end(), pr.data() + static_cast<std::size_t>(i) * k);
    std::copy(e.begin(), e.end(), pe.data() + static_cast<std::size_t>(i) * k);
  }
  loss *= tt * tt / n;
  return make_op(Tensor({1}, loss), {logits}, [n, tt, pr = std::move(pr), pe = std::move(pe)](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    // d/dz_R of T^2 KL = T (p_R - p_E), averaged over rows
    const double s = self.grad[0] * tt / n;
    for (std::size_t i = 0; i < pr.size(); ++i) g[i] += s * (pr[i] - pe[i]);
  });
}

Var binary_cross_entropy(const Var& probs, std::span<const int> targets) {
  const auto& p = probs.value();
  check(p.size() == targets.size() && !targets.empty(), "binary_cross_entropy",
        shape_string(p.shape()) + " vs " + std::to_string(targets.size()) + " targets");
  constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
  const std::size_t n = targets.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] != 0 && targets[i] != 1) {
      fail(ErrorCode::kValidation, "binary_cross_entropy: targets must be 0 or 1");
    }
    const double q = std::clamp(p[i], lo, hi);
    loss -= targets[i] ? std::log(q) : std::log(1.0 - q);
  }
  std::vector<int> t(targets.begin(), targets.end());
  return make_op(Tensor({1}, loss / static_cast<double>(n)), {probs}, [t](Node& self) {
    Node& pp = parent(self, 0);
    double* g = pp.grad_buffer().data();
    const double s = self.grad[0] / static_cast<double>(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double q = pp.value[i];
      if (q < lo || q > hi) continue;  // clamp is flat outside the range
      g[i] += s * (t[i] ? -1.0 / q : 1.0 / (1.0 - q));
    }
  });
}

Var cw_margin(const Var& logits, std::span<const int> labels, double kappa) {
  const auto& z = logits.value();
  check(z.rank() == 2 && static_cast<std::size_t>(z.dim(0)) == labels.size() && z.dim(1) >= 2,
        "cw_margin", shape_string(z.shape()));
  const int n = z.dim(0), k = z.dim(1);
  std::vector<std::pair<int, int>> active;  // (true, other) or (-1, -1)
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto row = z.row(i);
    int other = -1;
    for (int j = 0; j < k; ++j) {
      if (j == labels[i]) continue;
      if (other < 0 || row[j] > row[other]) other = j;
    }
    const double m = row[labels[i]] - row[other];
    if (m > -kappa) {
      total += m;
      active.emplace_back(labels[i], other);
    } else {
      total += -kappa;
      active.emplace_back(-1, -1);
    }
  }
  return make_op(Tensor({1}, total), {logits}, [k, active = std::move(active)](Node& self) {
    double* g = parent(self, 0).grad_buffer().data();
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (active[i].first < 0) continue;
      g[i * k + active[i].first] += self.grad[0];
      g[i * k + active[i].second] -= self.grad[0];
    }
  });
}

Var jitter_objective(const Var& logits, std::span<const int> labels, const Tensor& noise,
                     std::span<const double> row_weights, double sc) {
  const auto& z = logits.value();
  check(z.rank() == 2 && z.shape() == noise.shape() &&
            static_cast<std::size_t>(z.dim(0)) == labels.size() && labels.size() == row_weights.size(),
        "jitter_objective", shape_string(z.shape()));
  const int n = z.dim(0), k = z.dim(1);
  Tensor probs({n, k}, 0.0), hat({n, k}, 0.0);
  std::vector<double> norm(n);
  std::vector<int> arg(n);
  double total = 0.0;
  std::vector<double> u(k);
  for (int i = 0; i < n; ++i) {
    const auto row = z.row(i);
    int a = 0;
    for (int j = 1; j < k; ++j) {
      if (std::abs(row[j]) > std::abs(row[a])) a = j;
    }
    const double m = std::max(std::abs(row[a]), 1e-12);
    norm[i] = m;
    arg[i] = a;
    for (int j = 0; j < k; ++j) u[j] = sc * row[j] / m;
    const auto p = softmax(u);
    double cost = 0.0;
    for (int j = 0; j < k; ++j) {
      const std::size_t at = static_cast<std::size_t>(i) * k + j;
      probs[at] = p[j];
      hat[at] = p[j] + noise[at];
      const double d = hat[at] - (j == labels[i] ? 1.0 : 0.0);
      cost += d * d;
    }
    total += row_weights[i] * cost / k;
  }
  std::vector<int> y(labels.begin(), labels.end());
  std::vector<double> wts(row_weights.begin(), row_weights.end());
  return make_op(Tensor({1}, total / n), {logits},
                 [n, k, sc, y, wts, norm, arg, probs = std::move(probs), hat = std::move(hat)](Node& self) {
                   Node& pz = parent(self, 0);
                   double* g = pz.grad_buffer().data();
                   std::vector<double> dh(k), du(k);
                   for (int i = 0; i < n; ++i) {
                     const std::size_t off = static_cast<std::size_t>(i) * k;
                     const double s = self.grad[0] * wts[i] / n;
                     for (int j = 0; j < k; ++j) {
                       dh[j] = s * 2.0 * (hat[off + j] - (j == y[i] ? 1.0 : 0.0)) / k;
                     }
                     double dot = 0.0;
                     for (int j = 0; j < k; ++j) dot += probs[off + j] * dh[j];
                     for (int j = 0; j < k; ++j) du[j] = probs[off + j] * (dh[j] - dot);
                     const double m = norm[i];
                     double zdu = 0.0;
                     for (int j = 0; j < k; ++j) {
                       g[off + j] += sc * du[j] / m;
                       zdu += du[j] * pz.value[off + j];
                     }
                     const double sign = pz.value[off + arg[i]] >= 0.0 ? 1.0 : -1.0;
                     g[off + arg[i]] -= sc * sign * zdu / (m * m);
                   }
                 });
}

}  // namespace blindspot::nn
