#include "tricam/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>

#include "tricam/error.hpp"

namespace tricam::nn {

using kernels::Trans;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kShapeMismatch, what);
}

void add_into(std::span<double> dst, std::span<const double> src) {
  assert(dst.size() == src.size());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var Graph::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Graph::alias(const Tensor& value) {
  Node n;
  n.external = &value;
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Graph::parameter(Parameter& p) {
  if (p.grad.shape != p.value.shape) p.grad = Tensor(p.value.shape);
  Node n;
  n.external = &p.value;
  n.grad_sink = &p.grad;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Graph::record(Tensor value, bool needs_grad, BackwardFn backward_fn) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

const Tensor& Graph::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.external ? *n.external : n.value;
}

Tensor& Graph::grad(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad_sink) return *n.grad_sink;
  if (!n.grad_ready) {
    n.grad = Tensor(value(v).shape);
    n.grad_ready = true;
  }
  return n.grad;
}

bool Graph::has_grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.grad_sink != nullptr || n.grad_ready;
}

void Graph::backward(Var loss) {
  require(value(loss).size() == 1, "backward needs a scalar loss");
  grad(loss).fill(1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    // Closures only touch other nodes' grads; nodes_ is not resized here.
    if (n.backward && n.grad_ready) n.backward(*this);
  }
}

Var linear(Graph& g, Var x, Var w, Var b) {
  const Tensor& xv = g.value(x);
  const Tensor& wv = g.value(w);
  const Tensor& bv = g.value(b);
  require(xv.rank() == 2 && wv.rank() == 2 && xv.dim(1) == wv.dim(0) && bv.size() == wv.dim(1),
          "linear: x" + shape_str(xv.shape) + " w" + shape_str(wv.shape) + " b" +
              shape_str(bv.shape));
  const std::size_t rows = xv.dim(0), in = wv.dim(0), out = wv.dim(1);
  Tensor y({rows, out});
  kernels::gemm(Trans::kNo, Trans::kNo, rows, out, in, xv.data, wv.data, y.data);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < out; ++c) y.data[r * out + c] += bv.data[c];

  const bool needs = g.needs_grad(x) || g.needs_grad(w) || g.needs_grad(b);
  Var yv{g.size()};
  return g.record(std::move(y), needs, [=](Graph& gr) {
    const Tensor& gy = gr.grad(yv);
    if (gr.needs_grad(x)) {
      kernels::gemm(Trans::kNo, Trans::kYes, rows, in, out, gy.data, gr.value(w).data,
                    gr.grad(x).data, true);
    }
    if (gr.needs_grad(w)) {
      kernels::gemm(Trans::kYes, Trans::kNo, in, out, rows, gr.value(x).data, gy.data,
                    gr.grad(w).data, true);
    }
    if (gr.needs_grad(b)) {
      Tensor& gb = gr.grad(b);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < out; ++c) gb.data[c] += gy.data[r * out + c];
    }
  });
}

Var relu(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  Tensor y(xv.shape);
  for (std::size_t i = 0; i < xv.size(); ++i) y.data[i] = xv.data[i] > 0.0 ? xv.data[i] : 0.0;
  Var yv{g.size()};
  return g.record(std::move(y), g.needs_grad(x), [=](Graph& gr) {
    const Tensor& gy = gr.grad(yv);
    const Tensor& xs = gr.value(x);
    Tensor& gx = gr.grad(x);
    for (std::size_t i = 0; i < gy.size(); ++i)
      if (xs.data[i] > 0.0) gx.data[i] += gy.data[i];
  });
}

Var conv2d(Graph& g, Var x, Var w, Var b, std::size_t kernel, std::size_t stride,
           std::size_t pad) {
  const Tensor& xv = g.value(x);
  const Tensor& wv = g.value(w);
  require(xv.rank() == 4, "conv2d: input must be [N,C,H,W], got " + shape_str(xv.shape));
  kernels::ConvShape s;
  s.batch = xv.dim(0);
  s.in_channels = xv.dim(1);
  s.in_h = xv.dim(2);
  s.in_w = xv.dim(3);
  s.out_channels = wv.dim(0);
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  require(s.valid() && wv.rank() == 2 && wv.dim(1) == s.patch() &&
              g.value(b).size() == s.out_channels,
          "conv2d: x" + shape_str(xv.shape) + " w" + shape_str(wv.shape));
  Tensor y({s.batch, s.out_channels, s.out_h(), s.out_w()});
  kernels::conv2d_forward(s, xv.data, wv.data, g.value(b).data, y.data);

  const bool needs = g.needs_grad(x) || g.needs_grad(w) || g.needs_grad(b);
  Var yv{g.size()};
  return g.record(std::move(y), needs, [=](Graph& gr) {
    const Tensor& gy = gr.grad(yv);
    Tensor gx_tmp;
    if (gr.needs_grad(x)) gx_tmp = Tensor(gr.value(x).shape);
    // Weight/bias grads are accumulated by the kernel; route them to scratch
    // when the caller does not want them.
    Tensor scratch_w, scratch_b;
    std::span<double> gw, gb;
    if (gr.needs_grad(w)) {
      gw = gr.grad(w).span();
    } else {
      scratch_w = Tensor(gr.value(w).shape);
      gw = scratch_w.span();
    }
    if (gr.needs_grad(b)) {
      gb = gr.grad(b).span();
    } else {
      scratch_b = Tensor(gr.value(b).shape);
      gb = scratch_b.span();
    }
    kernels::conv2d_backward(s, gr.value(x).data, gr.value(w).data, gy.data, gx_tmp.span(), gw, gb);
    if (gr.needs_grad(x)) add_into(gr.grad(x).span(), gx_tmp.span());
  });
}

Var maxpool2(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  require(xv.rank() == 4 && xv.dim(2) >= 2 && xv.dim(3) >= 2,
          "maxpool2: input must be [N,C,H>=2,W>=2], got " + shape_str(xv.shape));
  const std::size_t planes = xv.dim(0) * xv.dim(1);
  Tensor y({xv.dim(0), xv.dim(1), xv.dim(2) / 2, xv.dim(3) / 2});
  std::vector<std::size_t> argmax(y.size());
  kernels::maxpool2_forward(planes, xv.dim(2), xv.dim(3), xv.data, y.data, argmax);
  Var yv{g.size()};
  return g.record(std::move(y), g.needs_grad(x), [=, argmax = std::move(argmax)](Graph& gr) {
    const Tensor& gy = gr.grad(yv);
    Tensor& gx = gr.grad(x);
    for (std::size_t i = 0; i < gy.size(); ++i) gx.data[argmax[i]] += gy.data[i];
  });
}

Var reshape(Graph& g, Var x, Shape shape) {
  const Tensor& xv = g.value(x);
  require(numel(shape) == xv.size(),
          "reshape " + shape_str(xv.shape) + " -> " + shape_str(shape));
  Tensor y(std::move(shape), xv.data);
  Var yv{g.size()};
  return g.record(std::move(y), g.needs_grad(x), [=](Graph& gr) {
    add_into(gr.grad(x).span(), gr.grad(yv).span());
  });
}

Var concat_cols(Graph& g, std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = g.value(parts[0]).dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  bool needs = false;
  for (Var p : parts) {
    const Tensor& v = g.value(p);
    require(v.rank() == 2 && v.dim(0) == rows, "concat_cols: row mismatch " + shape_str(v.shape));
    widths.push_back(v.dim(1));
    total += v.dim(1);
    needs = needs || g.needs_grad(p);
  }
  Tensor y({rows, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = g.value(parts[k]);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.data.data() + r * widths[k], widths[k], y.data.data() + r * total + off);
    off += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  Var yv{g.size()};
  return g.record(std::move(y), needs, [=](Graph& gr) {
    const Tensor& gy = gr.grad(yv);
    std::size_t o = 0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (gr.needs_grad(inputs[k])) {
        Tensor& gx = gr.grad(inputs[k]);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c)
            gx.data[r * widths[k] + c] += gy.data[r * total + o + c];
      }
      o += widths[k];
    }
  });
}

Var gather_cols(Graph& g, Var x, std::vector<std::size_t> cols) {
  const Tensor& xv = g.value(x);
  require(xv.rank() == 2, "gather_cols: x must be 2-D");
  const std::size_t rows = xv.dim(0), width = xv.dim(1);
  for (std::size_t c : cols) require(c < width, "gather_cols: column out of range");
  Tensor y({rows, cols.size()});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols.size(); ++j) y.data[r * cols.size() + j] = xv.data[r * width + cols[j]];
  Var yv{g.size()};
  return g.record(std::move(y), g.needs_grad(x), [=, cols = std::move(cols)](Graph& gr) {
    const Tensor& gy = gr.grad(yv);
    Tensor& gx = gr.grad(x);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < cols.size(); ++j)
        gx.data[r * width + cols[j]] += gy.data[r * cols.size() + j];
  });
}

Var scale_rows(Graph& g, Var x, Var s) {
  const Tensor& xv = g.value(x);
  const Tensor& sv = g.value(s);
  require(xv.rank() >= 1 && sv.size() == xv.dim(0),
          "scale_rows: x" + shape_str(xv.shape) + " s" + shape_str(sv.shape));
  const std::size_t rows = xv.dim(0), len = xv.size() / std::max<std::size_t>(rows, 1);
  Tensor y(xv.shape);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t l = 0; l < len; ++l) y.data[r * len + l] = xv.data[r * len + l] * sv.data[r];
  const bool needs = g.needs_grad(x) || g.needs_grad(s);
  Var yv{g.size()};
  return g.record(std::move(y), needs, [=](Graph& gr) {
    const Tensor& gy = gr.grad(yv);
    if (gr.needs_grad(x)) {
      const Tensor& ss = gr.value(s);
      Tensor& gx = gr.grad(x);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t l = 0; l < len; ++l) gx.data[r * len + l] += gy.data[r * len + l] * ss.data[r];
    }
    if (gr.needs_grad(s)) {
      const Tensor& xs = gr.value(x);
      Tensor& gs = gr.grad(s);
      for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t l = 0; l < len; ++l) acc += gy.data[r * len + l] * xs.data[r * len + l];
        gs.data[r] += acc;
      }
    }
  });
}

Var softmax_rows(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  require(xv.rank() == 2, "softmax_rows: x must be 2-D");
  const std::size_t rows = xv.dim(0), k = xv.dim(1);
  Tensor y(xv.shape);
  std::vector<double> sorted(k);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data.data() + r * k;
    double* out = y.data.data() + r * k;
    const double mx = *std::max_element(in, in + k);
    for (std::size_t j = 0; j < k; ++j) out[j] = std::exp(in[j] - mx);
    std::copy_n(out, k, sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    double z = 0.0;
    for (double e : sorted) z += e;
    for (std::size_t j = 0; j < k; ++j) out[j] /= z;
  }
  Var yv{g.size()};
  return g.record(std::move(y), g.needs_grad(x), [=](Graph& gr) {
    const Tensor& gy = gr.grad(yv);
    const Tensor& ys = gr.value(yv);
    Tensor& gx = gr.grad(x);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += gy.data[r * k + j] * ys.data[r * k + j];
      for (std::size_t j = 0; j < k; ++j)
        gx.data[r * k + j] += ys.data[r * k + j] * (gy.data[r * k + j] - dot);
    }
  });
}

Var masked_mse(Graph& g, Var pred, const Tensor& target, const Tensor& mask) {
  const Tensor& pv = g.value(pred);
  require(pv.rank() == 2 && target.shape == pv.shape && mask.size() == pv.dim(0),
          "masked_mse: pred" + shape_str(pv.shape) + " target" + shape_str(target.shape) +
              " mask" + shape_str(mask.shape));
  const std::size_t rows = pv.dim(0), cols = pv.dim(1);
  std::size_t valid_rows = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask.data[r] == 0.0) continue;
    ++valid_rows;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = pv.data[r * cols + c] - target.data[r * cols + c];
      sum += d * d;
    }
  }
  const double count = static_cast<double>(valid_rows * cols);
  Tensor y({1}, valid_rows ? sum / count : 0.0);
  Var yv{g.size()};
  return g.record(std::move(y), g.needs_grad(pred) && valid_rows > 0,
                  [=, target = target, mask = mask](Graph& gr) {
                    const double gl = gr.grad(yv).data[0];
                    const Tensor& ps = gr.value(pred);
                    Tensor& gp = gr.grad(pred);
                    for (std::size_t r = 0; r < rows; ++r) {
                      if (mask.data[r] == 0.0) continue;
                      for (std::size_t c = 0; c < cols; ++c) {
                        const std::size_t i = r * cols + c;
                        gp.data[i] += gl * 2.0 * (ps.data[i] - target.data[i]) / count;
                      }
                    }
                  });
}

Var weighted_sum(Graph& g, std::span<const Var> terms, std::span<const double> coefs) {
  require(terms.size() == coefs.size() && !terms.empty(), "weighted_sum: size mismatch");
  double total = 0.0;
  bool needs = false;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require(g.value(terms[i]).size() == 1, "weighted_sum: terms must be scalars");
    total += coefs[i] * g.value(terms[i]).data[0];
    needs = needs || g.needs_grad(terms[i]);
  }
  std::vector<Var> ts(terms.begin(), terms.end());
  std::vector<double> cs(coefs.begin(), coefs.end());
  Var yv{g.size()};
  return g.record(Tensor({1}, total), needs, [=](Graph& gr) {
    const double gl = gr.grad(yv).data[0];
    for (std::size_t i = 0; i < ts.size(); ++i)
      if (gr.needs_grad(ts[i])) gr.grad(ts[i]).data[0] += gl * cs[i];
  });
}

}  // namespace tricam::nn
