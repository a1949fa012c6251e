// Copyright 2026 The sharecmp Authors
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

#include "sharecmp/core/ops.hpp"

#include <algorithm>
#include <cmath>

#include "sharecmp/core/error.hpp"

namespace sharecmp::ops {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

bool wants(Graph& g, Ref r) { return g.needs_grad(r); }

Tensor& acc(Graph& g, Ref r) { return g.grad_buffer(r.id); }

} // namespace

Ref add(Graph& g, Ref a, Ref b) {
    const Tensor &va = g.val(a), &vb = g.val(b);
    check_input(va.same_shape(vb), "add: shape mismatch " + shape_str(va.shape()) + " vs " +
                                       shape_str(vb.shape()));
    Tensor out = va;
    out.add_(vb);
    return g.make(std::move(out), {a, b}, [a, b](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        if (wants(gg, a)) acc(gg, a).add_(dy);
        if (wants(gg, b)) acc(gg, b).add_(dy);
    });
}

Ref sub(Graph& g, Ref a, Ref b) {
    const Tensor &va = g.val(a), &vb = g.val(b);
    check_input(va.same_shape(vb), "sub: shape mismatch");
    Tensor out = va;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= vb[i];
    return g.make(std::move(out), {a, b}, [a, b](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        if (wants(gg, a)) acc(gg, a).add_(dy);
        if (wants(gg, b)) {
            Tensor& db = acc(gg, b);
            for (std::size_t i = 0; i < dy.numel(); ++i) db[i] -= dy[i];
        }
    });
}

Ref mul(Graph& g, Ref a, Ref b) {
    const Tensor &va = g.val(a), &vb = g.val(b);
    check_input(va.same_shape(vb), "mul: shape mismatch");
    Tensor out = va;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= vb[i];
    return g.make(std::move(out), {a, b}, [a, b](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor &va2 = gg.val(a), &vb2 = gg.val(b);
        if (wants(gg, a)) {
            Tensor& da = acc(gg, a);
            for (std::size_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] * vb2[i];
        }
        if (wants(gg, b)) {
            Tensor& db = acc(gg, b);
            for (std::size_t i = 0; i < dy.numel(); ++i) db[i] += dy[i] * va2[i];
        }
    });
}

Ref scale(Graph& g, Ref x, double s) {
    Tensor out = g.val(x);
    out.scale_(s);
    return g.make(std::move(out), {x}, [x, s](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        if (!wants(gg, x)) return;
        Tensor& dx = acc(gg, x);
        for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] += dy[i] * s;
    });
}

Ref scale_by(Graph& g, Ref x, Ref s) {
    const Tensor &vx = g.val(x), &vs = g.val(s);
    check_input(vs.numel() == 1, "scale_by: scale must be a single element");
    Tensor out = vx;
    out.scale_(vs[0]);
    return g.make(std::move(out), {x, s}, [x, s](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor &vx2 = gg.val(x), &vs2 = gg.val(s);
        if (wants(gg, x)) {
            Tensor& dx = acc(gg, x);
            for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] += dy[i] * vs2[0];
        }
        if (wants(gg, s)) {
            double d = 0.0;
            for (std::size_t i = 0; i < dy.numel(); ++i) d += dy[i] * vx2[i];
            acc(gg, s)[0] += d;
        }
    });
}

Ref add_scalar(Graph& g, Ref x, double s) {
    Tensor out = g.val(x);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += s;
    return g.make(std::move(out), {x}, [x](Graph& gg, int self) {
        if (wants(gg, x)) acc(gg, x).add_(gg.grad_buffer(self));
    });
}

Ref relu(Graph& g, Ref x) {
    Tensor out = g.val(x);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::max(0.0, out[i]);
    return g.make(std::move(out), {x}, [x](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor& vx = gg.val(x);
        Tensor& dx = acc(gg, x);
        for (std::size_t i = 0; i < dy.numel(); ++i)
            if (vx[i] > 0.0) dx[i] += dy[i];
    });
}

Ref gelu(Graph& g, Ref x) {
    const Tensor& vx = g.val(x);
    Tensor out(vx.shape());
    for (std::size_t i = 0; i < out.numel(); ++i)
        out[i] = 0.5 * vx[i] * (1.0 + std::erf(vx[i] * kInvSqrt2));
    return g.make(std::move(out), {x}, [x](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor& vx2 = gg.val(x);
        Tensor& dx = acc(gg, x);
        for (std::size_t i = 0; i < dy.numel(); ++i) {
            double v = vx2[i];
            double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            dx[i] += dy[i] * (cdf + v * pdf);
        }
    });
}

Ref sigmoid(Graph& g, Ref x) {
    const Tensor& vx = g.val(x);
    Tensor out(vx.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-vx[i]));
    Ref r = g.make(std::move(out), {x}, [x](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor& y = gg.value_buffer(self);
        Tensor& dx = acc(gg, x);
        for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
    });
    return r;
}

Ref prelu_chw(Graph& g, Ref x, Ref slope) {
    const Tensor& vx = g.val(x);
    const Tensor& vs = g.val(slope);
    check_input(vx.ndim() == 3, "prelu_chw expects CHW input");
    const int c = vx.dim(0);
    check_input(static_cast<int>(vs.numel()) == c || vs.numel() == 1,
                "prelu_chw: slope must have C entries or 1");
    const bool per_channel = vs.numel() > 1;
    const std::size_t plane = vx.numel() / static_cast<std::size_t>(c);
    Tensor out(vx.shape());
    for (int ch = 0; ch < c; ++ch) {
        double a = per_channel ? vs[static_cast<std::size_t>(ch)] : vs[0];
        for (std::size_t i = 0; i < plane; ++i) {
            std::size_t k = static_cast<std::size_t>(ch) * plane + i;
            out[k] = vx[k] > 0.0 ? vx[k] : a * vx[k];
        }
    }
    return g.make(std::move(out), {x, slope},
                  [x, slope, c, plane, per_channel](Graph& gg, int self) {
                      const Tensor& dy = gg.grad_buffer(self);
                      const Tensor& vx2 = gg.val(x);
                      const Tensor& vs2 = gg.val(slope);
                      const bool wx = wants(gg, x), ws = wants(gg, slope);
                      if (!wx && !ws) return;
                      for (int ch = 0; ch < c; ++ch) {
                          double a = per_channel ? vs2[static_cast<std::size_t>(ch)] : vs2[0];
                          double dslope = 0.0;
                          for (std::size_t i = 0; i < plane; ++i) {
                              std::size_t k = static_cast<std::size_t>(ch) * plane + i;
                              if (vx2[k] > 0.0) {
                                  if (wx) acc(gg, x)[k] += dy[k];
                              } else {
                                  if (wx) acc(gg, x)[k] += dy[k] * a;
                                  dslope += dy[k] * vx2[k];
                              }
                          }
                          if (ws)
                              acc(gg, slope)[per_channel ? static_cast<std::size_t>(ch) : 0] +=
                                  dslope;
                      }
                  });
}

Ref reshape(Graph& g, Ref x, std::vector<int> shape) {
    const Tensor& vx = g.val(x);
    check_input(Tensor::shape_numel(shape) == vx.numel(), "reshape: element count mismatch");
    Tensor out(shape);
    std::copy(vx.data(), vx.data() + vx.numel(), out.data());
    return g.make(std::move(out), {x}, [x](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        Tensor& dx = acc(gg, x);
        for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] += dy[i];
    });
}

Ref transpose2(Graph& g, Ref x) {
    const Tensor& vx = g.val(x);
    check_input(vx.ndim() == 2, "transpose2 expects a matrix");
    const int n = vx.dim(0), m = vx.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out.at2(j, i) = vx.at2(i, j);
    return g.make(std::move(out), {x}, [x, n, m](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        Tensor& dx = acc(gg, x);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) dx.at2(i, j) += dy.at2(j, i);
    });
}

Ref slice_cols(Graph& g, Ref x, int c0, int c1) {
    const Tensor& vx = g.val(x);
    check_input(vx.ndim() == 2 && 0 <= c0 && c0 < c1 && c1 <= vx.dim(1),
                "slice_cols: bad column range");
    const int n = vx.dim(0);
    Tensor out({n, c1 - c0});
    for (int i = 0; i < n; ++i)
        for (int j = c0; j < c1; ++j) out.at2(i, j - c0) = vx.at2(i, j);
    return g.make(std::move(out), {x}, [x, c0, c1, n](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        Tensor& dx = acc(gg, x);
        for (int i = 0; i < n; ++i)
            for (int j = c0; j < c1; ++j) dx.at2(i, j) += dy.at2(i, j - c0);
    });
}

Ref slice_channels_chw(Graph& g, Ref x, int c0, int c1) {
    const Tensor& vx = g.val(x);
    check_input(vx.ndim() == 3 && 0 <= c0 && c0 < c1 && c1 <= vx.dim(0),
                "slice_channels_chw: bad channel range");
    const int h = vx.dim(1), w = vx.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Tensor out({c1 - c0, h, w});
    std::copy(vx.data() + c0 * plane, vx.data() + c1 * plane, out.data());
    return g.make(std::move(out), {x}, [x, c0, plane](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        Tensor& dx = acc(gg, x);
        for (std::size_t i = 0; i < dy.numel(); ++i) dx[c0 * plane + i] += dy[i];
    });
}

Ref concat_chw(Graph& g, const std::vector<Ref>& xs) {
    check_input(!xs.empty(), "concat_chw: empty list");
    int h = g.val(xs[0]).dim(1), w = g.val(xs[0]).dim(2), c = 0;
    for (Ref r : xs) {
        const Tensor& t = g.val(r);
        check_input(t.ndim() == 3 && t.dim(1) == h && t.dim(2) == w,
                    "concat_chw: spatial dims differ");
        c += t.dim(0);
    }
    Tensor out({c, h, w});
    std::size_t off = 0;
    for (Ref r : xs) {
        const Tensor& t = g.val(r);
        std::copy(t.data(), t.data() + t.numel(), out.data() + off);
        off += t.numel();
    }
    std::vector<Ref> parents = xs;
    return g.make(std::move(out), parents, [parents](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        std::size_t off2 = 0;
        for (Ref r : parents) {
            std::size_t n = gg.val(r).numel();
            if (wants(gg, r)) {
                Tensor& dx = acc(gg, r);
                for (std::size_t i = 0; i < n; ++i) dx[i] += dy[off2 + i];
            }
            off2 += n;
        }
    });
}

Ref concat_cols(Graph& g, const std::vector<Ref>& xs) {
    check_input(!xs.empty(), "concat_cols: empty list");
    const int n = g.val(xs[0]).dim(0);
    int c = 0;
    for (Ref r : xs) {
        const Tensor& t = g.val(r);
        check_input(t.ndim() == 2 && t.dim(0) == n, "concat_cols: row counts differ");
        c += t.dim(1);
    }
    Tensor out({n, c});
    int off = 0;
    for (Ref r : xs) {
        const Tensor& t = g.val(r);
        const int w = t.dim(1);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < w; ++j) out.at2(i, off + j) = t.at2(i, j);
        off += w;
    }
    std::vector<Ref> parents = xs;
    return g.make(std::move(out), parents, [parents, n](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        int off2 = 0;
        for (Ref r : parents) {
            const int w = gg.val(r).dim(1);
            if (wants(gg, r)) {
                Tensor& dx = acc(gg, r);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < w; ++j) dx.at2(i, j) += dy.at2(i, off2 + j);
            }
            off2 += w;
        }
    });
}

Ref concat_vec(Graph& g, const std::vector<Ref>& xs) {
    check_input(!xs.empty(), "concat_vec: empty list");
    int n = 0;
    for (Ref r : xs) n += static_cast<int>(g.val(r).numel());
    Tensor out({n});
    std::size_t off = 0;
    for (Ref r : xs) {
        const Tensor& t = g.val(r);
        std::copy(t.data(), t.data() + t.numel(), out.data() + off);
        off += t.numel();
    }
    std::vector<Ref> parents = xs;
    return g.make(std::move(out), parents, [parents](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        std::size_t off2 = 0;
        for (Ref r : parents) {
            std::size_t k = gg.val(r).numel();
            if (wants(gg, r)) {
                Tensor& dx = acc(gg, r);
                for (std::size_t i = 0; i < k; ++i) dx[i] += dy[off2 + i];
            }
            off2 += k;
        }
    });
}

Ref chw_to_rows(Graph& g, Ref x) {
    const Tensor& vx = g.val(x);
    check_input(vx.ndim() == 3, "chw_to_rows expects CHW");
    const int c = vx.dim(0), h = vx.dim(1), w = vx.dim(2);
    Tensor out({h * w, c});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) out.at2(y * w + xx, ch) = vx.at3(ch, y, xx);
    return g.make(std::move(out), {x}, [x, c, h, w](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        Tensor& dx = acc(gg, x);
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) dx.at3(ch, y, xx) += dy.at2(y * w + xx, ch);
    });
}

Ref rows_to_chw(Graph& g, Ref x, int h, int w) {
    const Tensor& vx = g.val(x);
    check_input(vx.ndim() == 2 && vx.dim(0) == h * w, "rows_to_chw: row count != h*w");
    const int c = vx.dim(1);
    Tensor out({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) out.at3(ch, y, xx) = vx.at2(y * w + xx, ch);
    return g.make(std::move(out), {x}, [x, c, h, w](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        Tensor& dx = acc(gg, x);
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) dx.at2(y * w + xx, ch) += dy.at3(ch, y, xx);
    });
}

Ref matmul(Graph& g, Ref a, Ref b) {
    const Tensor &va = g.val(a), &vb = g.val(b);
    check_input(va.ndim() == 2 && vb.ndim() == 2 && va.dim(1) == vb.dim(0),
                "matmul: incompatible shapes " + shape_str(va.shape()) + " x " +
                    shape_str(vb.shape()));
    const int n = va.dim(0), k = va.dim(1), m = vb.dim(1);
    Tensor out({n, m});
    for (int i = 0; i < n; ++i) {
        double* orow = out.data() + static_cast<std::size_t>(i) * m;
        const double* arow = va.data() + static_cast<std::size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
            double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = vb.data() + static_cast<std::size_t>(kk) * m;
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    return g.make(std::move(out), {a, b}, [a, b, n, k, m](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor &va2 = gg.val(a), &vb2 = gg.val(b);
        if (wants(gg, a)) { // dA = dY * B^T
            Tensor& da = acc(gg, a);
            for (int i = 0; i < n; ++i) {
                const double* dyrow = dy.data() + static_cast<std::size_t>(i) * m;
                double* darow = da.data() + static_cast<std::size_t>(i) * k;
                for (int kk = 0; kk < k; ++kk) {
                    const double* brow = vb2.data() + static_cast<std::size_t>(kk) * m;
                    double s = 0.0;
                    for (int j = 0; j < m; ++j) s += dyrow[j] * brow[j];
                    darow[kk] += s;
                }
            }
        }
        if (wants(gg, b)) { // dB = A^T * dY
            Tensor& db = acc(gg, b);
            for (int i = 0; i < n; ++i) {
                const double* arow = va2.data() + static_cast<std::size_t>(i) * k;
                const double* dyrow = dy.data() + static_cast<std::size_t>(i) * m;
                for (int kk = 0; kk < k; ++kk) {
                    double av = arow[kk];
                    if (av == 0.0) continue;
                    double* dbrow = db.data() + static_cast<std::size_t>(kk) * m;
                    for (int j = 0; j < m; ++j) dbrow[j] += av * dyrow[j];
                }
            }
        }
    });
}

Ref add_bias_rows(Graph& g, Ref x, Ref bias) {
    const Tensor &vx = g.val(x), &vb = g.val(bias);
    check_input(vx.ndim() == 2 && static_cast<int>(vb.numel()) == vx.dim(1),
                "add_bias_rows: bias size must equal column count");
    const int n = vx.dim(0), c = vx.dim(1);
    Tensor out = vx;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) out.at2(i, j) += vb[static_cast<std::size_t>(j)];
    return g.make(std::move(out), {x, bias}, [x, bias, n, c](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        if (wants(gg, x)) acc(gg, x).add_(dy);
        if (wants(gg, bias)) {
            Tensor& db = acc(gg, bias);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < c; ++j) db[static_cast<std::size_t>(j)] += dy.at2(i, j);
        }
    });
}

Ref conv2d(Graph& g, Ref x, Ref w, Ref bias, int stride, int pad, int dilation, int groups) {
    const Tensor &vx = g.val(x), &vw = g.val(w);
    check_input(vx.ndim() == 3 && vw.ndim() == 4, "conv2d: expects CHW input, [Co,Ci/g,kh,kw] weight");
    const int cin = vx.dim(0), h = vx.dim(1), win = vx.dim(2);
    const int cout = vw.dim(0), cig = vw.dim(1), kh = vw.dim(2), kw = vw.dim(3);
    check_input(groups >= 1 && cin % groups == 0 && cout % groups == 0,
                "conv2d: channel counts must divide groups");
    check_input(cig == cin / groups, "conv2d: weight input-channel dim mismatch");
    const int oh = (h + 2 * pad - dilation * (kh - 1) - 1) / stride + 1;
    const int ow = (win + 2 * pad - dilation * (kw - 1) - 1) / stride + 1;
    check_input(oh > 0 && ow > 0, "conv2d: output would be empty");
    const int copg = cout / groups;

    Tensor out({cout, oh, ow});
    for (int co = 0; co < cout; ++co) {
        const int gi = co / copg;
        const int cbase = gi * cig;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double s = 0.0;
                for (int ci = 0; ci < cig; ++ci) {
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = oy * stride - pad + ky * dilation;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = ox * stride - pad + kx * dilation;
                            if (ix < 0 || ix >= win) continue;
                            s += vw[((static_cast<std::size_t>(co) * cig + ci) * kh + ky) * kw +
                                    kx] *
                                 vx.at3(cbase + ci, iy, ix);
                        }
                    }
                }
                out.at3(co, oy, ox) = s;
            }
        }
    }
    if (bias.valid()) {
        const Tensor& vb = g.val(bias);
        check_input(static_cast<int>(vb.numel()) == cout, "conv2d: bias size mismatch");
        for (int co = 0; co < cout; ++co) {
            double b = vb[static_cast<std::size_t>(co)];
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) out.at3(co, oy, ox) += b;
        }
    }

    std::vector<Ref> parents = bias.valid() ? std::vector<Ref>{x, w, bias}
                                            : std::vector<Ref>{x, w};
    auto bwd = [x, w, bias, stride, pad, dilation, cig, copg, kh, kw, h, win, oh,
                ow](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor &vx2 = gg.val(x), &vw2 = gg.val(w);
        const int cout2 = dy.dim(0);
        const bool wx = wants(gg, x), ww = wants(gg, w);
        Tensor* dx = wx ? &acc(gg, x) : nullptr;
        Tensor* dw = ww ? &acc(gg, w) : nullptr;
        if (wx || ww) {
            for (int co = 0; co < cout2; ++co) {
                const int gi = co / copg;
                const int cbase = gi * cig;
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                        const double gout = dy.at3(co, oy, ox);
                        if (gout == 0.0) continue;
                        for (int ci = 0; ci < cig; ++ci) {
                            for (int ky = 0; ky < kh; ++ky) {
                                const int iy = oy * stride - pad + ky * dilation;
                                if (iy < 0 || iy >= h) continue;
                                for (int kx = 0; kx < kw; ++kx) {
                                    const int ix = ox * stride - pad + kx * dilation;
                                    if (ix < 0 || ix >= win) continue;
                                    const std::size_t widx =
                                        ((static_cast<std::size_t>(co) * cig + ci) * kh + ky) *
                                            kw +
                                        kx;
                                    if (wx) (*dx).at3(cbase + ci, iy, ix) += gout * vw2[widx];
                                    if (ww) (*dw)[widx] += gout * vx2.at3(cbase + ci, iy, ix);
                                }
                            }
                        }
                    }
                }
            }
        }
        if (bias.valid() && wants(gg, bias)) {
            Tensor& db = acc(gg, bias);
            for (int co = 0; co < cout2; ++co) {
                double s = 0.0;
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) s += dy.at3(co, oy, ox);
                db[static_cast<std::size_t>(co)] += s;
            }
        }
    };
    return g.make(std::move(out), parents, bwd);
}

Ref layer_norm_rows(Graph& g, Ref x, Ref gamma, Ref beta, double eps) {
    const Tensor &vx = g.val(x), &vg = g.val(gamma), &vb = g.val(beta);
    check_input(vx.ndim() == 2, "layer_norm_rows expects [rows, cols]");
    const int n = vx.dim(0), c = vx.dim(1);
    check_input(static_cast<int>(vg.numel()) == c && static_cast<int>(vb.numel()) == c,
                "layer_norm_rows: gamma/beta size mismatch");
    Tensor out({n, c});
    Tensor xhat({n, c});
    Tensor inv_sigma({n});
    for (int i = 0; i < n; ++i) {
        double mean = 0.0;
        for (int j = 0; j < c; ++j) mean += vx.at2(i, j);
        mean /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) {
            double d = vx.at2(i, j) - mean;
            var += d * d;
        }
        var /= c;
        double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[static_cast<std::size_t>(i)] = is;
        for (int j = 0; j < c; ++j) {
            double xh = (vx.at2(i, j) - mean) * is;
            xhat.at2(i, j) = xh;
            out.at2(i, j) = xh * vg[static_cast<std::size_t>(j)] + vb[static_cast<std::size_t>(j)];
        }
    }
    auto xh = std::make_shared<Tensor>(std::move(xhat));
    auto is = std::make_shared<Tensor>(std::move(inv_sigma));
    return g.make(std::move(out), {x, gamma, beta}, [x, gamma, beta, n, c, xh,
                                                     is](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor& vg2 = gg.val(gamma);
        const bool wx = wants(gg, x);
        if (wx) {
            Tensor& dx = acc(gg, x);
            for (int i = 0; i < n; ++i) {
                double mean_gdy = 0.0, mean_gdyxh = 0.0;
                for (int j = 0; j < c; ++j) {
                    double gdy = dy.at2(i, j) * vg2[static_cast<std::size_t>(j)];
                    mean_gdy += gdy;
                    mean_gdyxh += gdy * xh->at2(i, j);
                }
                mean_gdy /= c;
                mean_gdyxh /= c;
                double isv = (*is)[static_cast<std::size_t>(i)];
                for (int j = 0; j < c; ++j) {
                    double gdy = dy.at2(i, j) * vg2[static_cast<std::size_t>(j)];
                    dx.at2(i, j) += isv * (gdy - mean_gdy - xh->at2(i, j) * mean_gdyxh);
                }
            }
        }
        if (wants(gg, gamma)) {
            Tensor& dg = acc(gg, gamma);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < c; ++j)
                    dg[static_cast<std::size_t>(j)] += dy.at2(i, j) * xh->at2(i, j);
        }
        if (wants(gg, beta)) {
            Tensor& db = acc(gg, beta);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < c; ++j) db[static_cast<std::size_t>(j)] += dy.at2(i, j);
        }
    });
}

Ref softmax_rows(Graph& g, Ref x) {
    const Tensor& vx = g.val(x);
    check_input(vx.ndim() == 2, "softmax_rows expects [rows, cols]");
    const int n = vx.dim(0), c = vx.dim(1);
    Tensor out({n, c});
    for (int i = 0; i < n; ++i) {
        double m = vx.at2(i, 0);
        for (int j = 1; j < c; ++j) m = std::max(m, vx.at2(i, j));
        double z = 0.0;
        for (int j = 0; j < c; ++j) {
            double e = std::exp(vx.at2(i, j) - m);
            out.at2(i, j) = e;
            z += e;
        }
        for (int j = 0; j < c; ++j) out.at2(i, j) /= z;
    }
    return g.make(std::move(out), {x}, [x, n, c](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor& y = gg.value_buffer(self);
        Tensor& dx = acc(gg, x);
        for (int i = 0; i < n; ++i) {
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += dy.at2(i, j) * y.at2(i, j);
            for (int j = 0; j < c; ++j) dx.at2(i, j) += y.at2(i, j) * (dy.at2(i, j) - dot);
        }
    });
}

Ref upsample_bilinear(Graph& g, Ref x, int out_h, int out_w) {
    const Tensor& vx = g.val(x);
    Tensor out = bilinear_resize(vx, out_h, out_w);
    const int c = vx.dim(0), h = vx.dim(1), w = vx.dim(2);
    return g.make(std::move(out), {x}, [x, c, h, w, out_h, out_w](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        Tensor& dx = acc(gg, x);
        const double sy = static_cast<double>(h) / out_h;
        const double sx = static_cast<double>(w) / out_w;
        for (int oy = 0; oy < out_h; ++oy) {
            double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
            int y0 = static_cast<int>(fy);
            int y1 = std::min(y0 + 1, h - 1);
            double wy = fy - y0;
            for (int ox = 0; ox < out_w; ++ox) {
                double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
                int x0 = static_cast<int>(fx);
                int x1 = std::min(x0 + 1, w - 1);
                double wx = fx - x0;
                for (int ch = 0; ch < c; ++ch) {
                    double gout = dy.at3(ch, oy, ox);
                    dx.at3(ch, y0, x0) += gout * (1.0 - wy) * (1.0 - wx);
                    dx.at3(ch, y0, x1) += gout * (1.0 - wy) * wx;
                    dx.at3(ch, y1, x0) += gout * wy * (1.0 - wx);
                    dx.at3(ch, y1, x1) += gout * wy * wx;
                }
            }
        }
    });
}

Ref avg_pool_chw(Graph& g, Ref x, int out_h, int out_w) {
    const Tensor& vx = g.val(x);
    check_input(vx.ndim() == 3, "avg_pool_chw expects CHW");
    const int c = vx.dim(0), h = vx.dim(1), w = vx.dim(2);
    check_input(out_h >= 1 && out_h <= h && out_w >= 1 && out_w <= w,
                "avg_pool_chw: output must not exceed input");
    Tensor out({c, out_h, out_w});
    for (int oy = 0; oy < out_h; ++oy) {
        const int y0 = oy * h / out_h, y1 = (oy + 1) * h / out_h;
        for (int ox = 0; ox < out_w; ++ox) {
            const int x0 = ox * w / out_w, x1 = (ox + 1) * w / out_w;
            const double inv = 1.0 / ((y1 - y0) * (x1 - x0));
            for (int ch = 0; ch < c; ++ch) {
                double s = 0.0;
                for (int y = y0; y < y1; ++y)
                    for (int xx = x0; xx < x1; ++xx) s += vx.at3(ch, y, xx);
                out.at3(ch, oy, ox) = s * inv;
            }
        }
    }
    return g.make(std::move(out), {x}, [x, c, h, w, out_h, out_w](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        Tensor& dx = acc(gg, x);
        for (int oy = 0; oy < out_h; ++oy) {
            const int y0 = oy * h / out_h, y1 = (oy + 1) * h / out_h;
            for (int ox = 0; ox < out_w; ++ox) {
                const int x0 = ox * w / out_w, x1 = (ox + 1) * w / out_w;
                const double inv = 1.0 / ((y1 - y0) * (x1 - x0));
                for (int ch = 0; ch < c; ++ch) {
                    const double gv = dy.at3(ch, oy, ox) * inv;
                    for (int y = y0; y < y1; ++y)
                        for (int xx = x0; xx < x1; ++xx) dx.at3(ch, y, xx) += gv;
                }
            }
        }
    });
}

Ref gap_chw(Graph& g, Ref x) {
    const Tensor& vx = g.val(x);
    check_input(vx.ndim() == 3, "gap_chw expects CHW");
    const int c = vx.dim(0);
    const std::size_t plane = vx.numel() / static_cast<std::size_t>(c);
    Tensor out({c});
    for (int ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += vx[static_cast<std::size_t>(ch) * plane + i];
        out[static_cast<std::size_t>(ch)] = s / static_cast<double>(plane);
    }
    return g.make(std::move(out), {x}, [x, c, plane](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        Tensor& dx = acc(gg, x);
        for (int ch = 0; ch < c; ++ch) {
            double gv = dy[static_cast<std::size_t>(ch)] / static_cast<double>(plane);
            for (std::size_t i = 0; i < plane; ++i) dx[static_cast<std::size_t>(ch) * plane + i] += gv;
        }
    });
}

Ref mul_channel_chw(Graph& g, Ref x, Ref gate) {
    const Tensor &vx = g.val(x), &vg = g.val(gate);
    check_input(vx.ndim() == 3 && static_cast<int>(vg.numel()) == vx.dim(0),
                "mul_channel_chw: gate must have one entry per channel");
    const int c = vx.dim(0);
    const std::size_t plane = vx.numel() / static_cast<std::size_t>(c);
    Tensor out = vx;
    for (int ch = 0; ch < c; ++ch) {
        double gv = vg[static_cast<std::size_t>(ch)];
        for (std::size_t i = 0; i < plane; ++i) out[static_cast<std::size_t>(ch) * plane + i] *= gv;
    }
    return g.make(std::move(out), {x, gate}, [x, gate, c, plane](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor &vx2 = gg.val(x), &vg2 = gg.val(gate);
        if (wants(gg, x)) {
            Tensor& dx = acc(gg, x);
            for (int ch = 0; ch < c; ++ch) {
                double gv = vg2[static_cast<std::size_t>(ch)];
                for (std::size_t i = 0; i < plane; ++i) {
                    std::size_t k = static_cast<std::size_t>(ch) * plane + i;
                    dx[k] += dy[k] * gv;
                }
            }
        }
        if (wants(gg, gate)) {
            Tensor& dg = acc(gg, gate);
            for (int ch = 0; ch < c; ++ch) {
                double s = 0.0;
                for (std::size_t i = 0; i < plane; ++i) {
                    std::size_t k = static_cast<std::size_t>(ch) * plane + i;
                    s += dy[k] * vx2[k];
                }
                dg[static_cast<std::size_t>(ch)] += s;
            }
        }
    });
}

Ref mul_map_chw(Graph& g, Ref x, Ref m) {
    const Tensor &vx = g.val(x), &vm = g.val(m);
    check_input(vx.ndim() == 3 && vm.ndim() == 3 && vm.dim(0) == 1 && vm.dim(1) == vx.dim(1) &&
                    vm.dim(2) == vx.dim(2),
                "mul_map_chw: map must be [1,H,W] matching x");
    const int c = vx.dim(0);
    const std::size_t plane = vx.numel() / static_cast<std::size_t>(c);
    Tensor out = vx;
    for (int ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < plane; ++i)
            out[static_cast<std::size_t>(ch) * plane + i] *= vm[i];
    return g.make(std::move(out), {x, m}, [x, m, c, plane](Graph& gg, int self) {
        const Tensor& dy = gg.grad_buffer(self);
        const Tensor &vx2 = gg.val(x), &vm2 = gg.val(m);
        if (wants(gg, x)) {
            Tensor& dx = acc(gg, x);
            for (int ch = 0; ch < c; ++ch)
                for (std::size_t i = 0; i < plane; ++i) {
                    std::size_t k = static_cast<std::size_t>(ch) * plane + i;
                    dx[k] += dy[k] * vm2[i];
                }
        }
        if (wants(gg, m)) {
            Tensor& dm = acc(gg, m);
            for (int ch = 0; ch < c; ++ch)
                for (std::size_t i = 0; i < plane; ++i) {
                    std::size_t k = static_cast<std::size_t>(ch) * plane + i;
                    dm[i] += dy[k] * vx2[k];
                }
        }
    });
}

Ref dropout(Graph& g, Ref x, double rate, Rng& rng) {
    if (rate <= 0.0) return x;
    check_input(rate < 1.0, "dropout: rate must be < 1");
    const Tensor& vx = g.val(x);
    auto mask = std::make_shared<Tensor>(vx.shape());
    const double keep = 1.0 - rate;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor out(vx.shape());
    for (std::size_t i = 0; i < vx.numel(); ++i) {
        double mv = u(rng) < keep ? 1.0 / keep : 0.0;
        (*mask)[i] = mv;
        out[i] = vx[i] * mv;
    }
    return g.make(std::move(out), {x}, [x, mask](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        const Tensor& dy = gg.grad_buffer(self);
        Tensor& dx = acc(gg, x);
        for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] += dy[i] * (*mask)[i];
    });
}

Ref sum_all(Graph& g, Ref x) {
    const Tensor& vx = g.val(x);
    Tensor out({1});
    out[0] = vx.sum();
    return g.make(std::move(out), {x}, [x](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        double gv = gg.grad_buffer(self)[0];
        Tensor& dx = acc(gg, x);
        for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += gv;
    });
}

Ref mean_all(Graph& g, Ref x) {
    const Tensor& vx = g.val(x);
    const double n = static_cast<double>(vx.numel());
    Tensor out({1});
    out[0] = vx.sum() / n;
    return g.make(std::move(out), {x}, [x, n](Graph& gg, int self) {
        if (!wants(gg, x)) return;
        double gv = gg.grad_buffer(self)[0] / n;
        Tensor& dx = acc(gg, x);
        for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += gv;
    });
}

Ref cross_entropy_chw(Graph& g, Ref logits, const LabelMap& labels, std::uint8_t ignore,
                      bool* all_ignored) {
    const Tensor& vl = g.val(logits);
    check_input(vl.ndim() == 3, "cross_entropy_chw expects [Cls,H,W] logits");
    const int cls = vl.dim(0), h = vl.dim(1), w = vl.dim(2);
    check_input(labels.h == h && labels.w == w, "cross_entropy_chw: label dims mismatch");
    check_input(vl.all_finite(), "cross_entropy_chw: non-finite logits");

    std::size_t count = 0;
    double loss = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t lab = labels.at(y, x);
            if (lab == ignore) continue;
            check_input(lab < cls, "cross_entropy_chw: label id out of range");
            double m = vl.at3(0, y, x);
            for (int c = 1; c < cls; ++c) m = std::max(m, vl.at3(c, y, x));
            double z = 0.0;
            for (int c = 0; c < cls; ++c) z += std::exp(vl.at3(c, y, x) - m);
            loss += m + std::log(z) - vl.at3(lab, y, x);
            ++count;
        }
    }
    if (all_ignored != nullptr) *all_ignored = (count == 0);
    Tensor out({1});
    out[0] = count > 0 ? loss / static_cast<double>(count) : 0.0;

    auto labs = std::make_shared<LabelMap>(labels);
    return g.make(std::move(out), {logits},
                  [logits, labs, cls, h, w, ignore, count](Graph& gg, int self) {
                      if (!wants(gg, logits) || count == 0) return;
                      const double gv = gg.grad_buffer(self)[0] / static_cast<double>(count);
                      const Tensor& vl2 = gg.val(logits);
                      Tensor& dx = acc(gg, logits);
                      for (int y = 0; y < h; ++y) {
                          for (int x = 0; x < w; ++x) {
                              std::uint8_t lab = labs->at(y, x);
                              if (lab == ignore) continue;
                              double m = vl2.at3(0, y, x);
                              for (int c = 1; c < cls; ++c) m = std::max(m, vl2.at3(c, y, x));
                              double z = 0.0;
                              for (int c = 0; c < cls; ++c) z += std::exp(vl2.at3(c, y, x) - m);
                              for (int c = 0; c < cls; ++c) {
                                  double p = std::exp(vl2.at3(c, y, x) - m) / z;
                                  dx.at3(c, y, x) += gv * (p - (c == lab ? 1.0 : 0.0));
                              }
                          }
                      }
                  });
}

} // namespace sharecmp::ops
