#include "cdi/autodiff.hpp"

#include <cmath>

#include "cdi/nn_kernels.hpp"
#include "cdi/projector.hpp"

namespace cdi::ad {

// ---------------------------------------------------------------- ParamStore

Param& ParamStore::create(const std::string& name, std::vector<int> shape, bool proj_domain) {
    if (has(name)) throw StateError("parameter already registered: " + name);
    items_.push_back(std::make_unique<Param>(name, std::move(shape), proj_domain));
    return *items_.back();
}

Param& ParamStore::get(const std::string& name) {
    for (auto& p : items_)
        if (p->name == name) return *p;
    throw StateError("unknown parameter: " + name);
}

const Param& ParamStore::get(const std::string& name) const {
    for (auto& p : items_)
        if (p->name == name) return *p;
    throw StateError("unknown parameter: " + name);
}

bool ParamStore::has(const std::string& name) const {
    for (auto& p : items_)
        if (p->name == name) return true;
    return false;
}

std::vector<Param*> ParamStore::all() {
    std::vector<Param*> out;
    out.reserve(items_.size());
    for (auto& p : items_) out.push_back(p.get());
    return out;
}

std::vector<const Param*> ParamStore::all() const {
    std::vector<const Param*> out;
    out.reserve(items_.size());
    for (auto& p : items_) out.push_back(p.get());
    return out;
}

std::size_t ParamStore::count_values() const {
    std::size_t n = 0;
    for (auto& p : items_) n += p->value.numel();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& p : items_) p->grad.fill(0.0);
}

// ---------------------------------------------------------------------- Tape

VarId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<VarId>(nodes_.size() - 1);
}

Tape::Node& Tape::at(VarId id) {
    if (id < 0 || id >= static_cast<VarId>(nodes_.size()))
        throw StateError("invalid tape variable id " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id)];
}

const Tape::Node& Tape::at(VarId id) const {
    if (id < 0 || id >= static_cast<VarId>(nodes_.size()))
        throw StateError("invalid tape variable id " + std::to_string(id));
    return nodes_[static_cast<std::size_t>(id)];
}

Tensor& Tape::adj_of(Node& n) {
    if (!n.has_adj) {
        n.adj = Tensor(n.val.shape);
        n.has_adj = true;
    }
    return n.adj;
}

VarId Tape::input(Tensor t) {
    t.require_finite("tape input");
    Node n;
    n.val = std::move(t);
    return push(std::move(n));
}

VarId Tape::input_grad(Tensor t) {
    t.require_finite("tape input");
    Node n;
    n.val = std::move(t);
    n.needs_grad = true;
    return push(std::move(n));
}

VarId Tape::param(Param& p) {
    p.value.require_finite("parameter " + p.name);
    Node n;
    n.val = p.value;
    n.needs_grad = true;
    n.bound = &p;
    return push(std::move(n));
}

VarId Tape::conv2d(VarId x, VarId w, VarId b) {
    Node n;
    n.op = Op::Conv2d;
    n.in = {x, w, b};
    nnk::conv2d_forward(at(x).val, at(w).val, at(b).val, n.val);
    n.aux = at(w).val.dim(2);
    n.needs_grad = at(x).needs_grad || at(w).needs_grad || at(b).needs_grad;
    return push(std::move(n));
}

VarId Tape::avg_pool2(VarId x) {
    const Tensor& v = at(x).val;
    if (v.ndim() != 3 || v.dim(1) % 2 || v.dim(2) % 2)
        throw ShapeError("avg_pool2: need [C,H,W] with even H,W, got " + Tensor::shape_str(v.shape));
    Node n;
    n.op = Op::AvgPool2;
    n.in = {x};
    const int c = v.dim(0), h = v.dim(1) / 2, w = v.dim(2) / 2;
    n.val = Tensor({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx)
                n.val.at3(ch, y, xx) = 0.25 * (v.at3(ch, 2 * y, 2 * xx) + v.at3(ch, 2 * y, 2 * xx + 1) +
                                               v.at3(ch, 2 * y + 1, 2 * xx) +
                                               v.at3(ch, 2 * y + 1, 2 * xx + 1));
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

VarId Tape::upsample2(VarId x) {
    const Tensor& v = at(x).val;
    if (v.ndim() != 3) throw ShapeError("upsample2: need [C,H,W], got " + Tensor::shape_str(v.shape));
    Node n;
    n.op = Op::Upsample2;
    n.in = {x};
    const int c = v.dim(0), h = v.dim(1), w = v.dim(2);
    n.val = Tensor({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx) n.val.at3(ch, y, xx) = v.at3(ch, y / 2, xx / 2);
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

VarId Tape::relu(VarId x) {
    Node n;
    n.op = Op::Relu;
    n.in = {x};
    n.val = at(x).val;
    for (auto& v : n.val.data) v = v > 0.0 ? v : 0.0;
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

VarId Tape::sigmoid(VarId x) {
    Node n;
    n.op = Op::Sigmoid;
    n.in = {x};
    n.val = at(x).val;
    for (auto& v : n.val.data) {
        // Stable in both tails.
        if (v >= 0.0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

VarId Tape::concat(const std::vector<VarId>& xs) {
    if (xs.empty()) throw ShapeError("concat: no inputs");
    const Tensor& first = at(xs[0]).val;
    if (first.ndim() != 3) throw ShapeError("concat: need [C,H,W] inputs");
    int ctotal = 0;
    for (VarId id : xs) {
        const Tensor& v = at(id).val;
        if (v.ndim() != 3 || v.dim(1) != first.dim(1) || v.dim(2) != first.dim(2))
            throw ShapeError("concat: mismatched input " + Tensor::shape_str(v.shape) + " vs " +
                             Tensor::shape_str(first.shape));
        ctotal += v.dim(0);
    }
    Node n;
    n.op = Op::Concat;
    n.in = xs;
    n.val = Tensor({ctotal, first.dim(1), first.dim(2)});
    std::size_t off = 0;
    for (VarId id : xs) {
        const Tensor& v = at(id).val;
        std::copy(v.data.begin(), v.data.end(), n.val.data.begin() + off);
        off += v.numel();
    }
    n.needs_grad = false;
    for (VarId id : xs) n.needs_grad = n.needs_grad || at(id).needs_grad;
    return push(std::move(n));
}

VarId Tape::add(VarId a, VarId b) {
    if (!at(a).val.same_shape(at(b).val))
        throw ShapeError("add: " + Tensor::shape_str(at(a).val.shape) + " vs " +
                         Tensor::shape_str(at(b).val.shape));
    Node n;
    n.op = Op::Add;
    n.in = {a, b};
    n.val = at(a).val;
    const Tensor& vb = at(b).val;
    for (std::size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] += vb.data[i];
    n.needs_grad = at(a).needs_grad || at(b).needs_grad;
    return push(std::move(n));
}

VarId Tape::mul(VarId a, VarId b) {
    if (!at(a).val.same_shape(at(b).val))
        throw ShapeError("mul: " + Tensor::shape_str(at(a).val.shape) + " vs " +
                         Tensor::shape_str(at(b).val.shape));
    Node n;
    n.op = Op::Mul;
    n.in = {a, b};
    n.val = at(a).val;
    const Tensor& vb = at(b).val;
    for (std::size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] *= vb.data[i];
    n.needs_grad = at(a).needs_grad || at(b).needs_grad;
    return push(std::move(n));
}

VarId Tape::channel_scale(VarId x, VarId s) {
    const Tensor& vx = at(x).val;
    const Tensor& vs = at(s).val;
    if (vx.ndim() != 3 || vs.ndim() != 1 || vs.dim(0) != vx.dim(0))
        throw ShapeError("channel_scale: x " + Tensor::shape_str(vx.shape) + " s " +
                         Tensor::shape_str(vs.shape));
    Node n;
    n.op = Op::ChannelScale;
    n.in = {x, s};
    n.val = vx;
    const std::size_t hw = static_cast<std::size_t>(vx.dim(1)) * vx.dim(2);
    for (int c = 0; c < vx.dim(0); ++c) {
        double k = vs.data[c];
        double* p = n.val.ptr() + c * hw;
        for (std::size_t i = 0; i < hw; ++i) p[i] *= k;
    }
    n.needs_grad = at(x).needs_grad || at(s).needs_grad;
    return push(std::move(n));
}

VarId Tape::fc(VarId x, VarId w, VarId b) {
    Node n;
    n.op = Op::Fc;
    n.in = {x, w, b};
    nnk::fc_forward(at(x).val, at(w).val, at(b).val, n.val);
    n.needs_grad = at(x).needs_grad || at(w).needs_grad || at(b).needs_grad;
    return push(std::move(n));
}

VarId Tape::gap(VarId x) {
    const Tensor& v = at(x).val;
    if (v.ndim() != 3) throw ShapeError("gap: need [C,H,W], got " + Tensor::shape_str(v.shape));
    Node n;
    n.op = Op::Gap;
    n.in = {x};
    const int c = v.dim(0);
    const std::size_t hw = static_cast<std::size_t>(v.dim(1)) * v.dim(2);
    n.val = Tensor({c});
    for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        const double* p = v.ptr() + ch * hw;
        for (std::size_t i = 0; i < hw; ++i) acc += p[i];
        n.val.data[ch] = acc / static_cast<double>(hw);
    }
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

VarId Tape::sum_all(VarId x) {
    Node n;
    n.op = Op::Sum;
    n.in = {x};
    n.val = Tensor({1});
    n.val.data[0] = sum(at(x).val);
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

VarId Tape::scale(VarId x, double k) {
    Node n;
    n.op = Op::Scale;
    n.in = {x};
    n.scalar = k;
    n.val = at(x).val;
    for (auto& v : n.val.data) v *= k;
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

VarId Tape::l1_loss(VarId x, VarId target) {
    const Tensor& vx = at(x).val;
    const Tensor& vt = at(target).val;
    if (!vx.same_shape(vt))
        throw ShapeError("l1_loss: " + Tensor::shape_str(vx.shape) + " vs " +
                         Tensor::shape_str(vt.shape));
    Node n;
    n.op = Op::L1Loss;
    n.in = {x, target};
    n.val = Tensor({1});
    double acc = 0.0;
    for (std::size_t i = 0; i < vx.data.size(); ++i) acc += std::abs(vx.data[i] - vt.data[i]);
    n.val.data[0] = acc / static_cast<double>(vx.numel());
    n.needs_grad = at(x).needs_grad || at(target).needs_grad;
    return push(std::move(n));
}

VarId Tape::forward_project(VarId x, const tomo::Geometry& g, tomo::AngleSet set) {
    const Tensor& v = at(x).val;
    if (v.ndim() != 3 || v.dim(0) != 1 || v.dim(1) != g.n || v.dim(2) != g.n)
        throw ShapeError("forward_project node: need [1," + std::to_string(g.n) + "," +
                         std::to_string(g.n) + "], got " + Tensor::shape_str(v.shape));
    Node n;
    n.op = Op::ForwardProject;
    n.in = {x};
    n.geom = g;
    n.angle_set = set;
    Tensor img({g.n, g.n}, v.data);
    Tensor sino = tomo::forward_project(img, nullptr, g, set);
    n.val = Tensor({1, g.rows(set), g.n}, std::move(sino.data));
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

VarId Tape::back_project(VarId x, const tomo::Geometry& g, tomo::AngleSet set) {
    const Tensor& v = at(x).val;
    if (v.ndim() != 3 || v.dim(0) != 1 || v.dim(1) != g.rows(set) || v.dim(2) != g.n)
        throw ShapeError("back_project node: need [1," + std::to_string(g.rows(set)) + "," +
                         std::to_string(g.n) + "], got " + Tensor::shape_str(v.shape));
    Node n;
    n.op = Op::BackProject;
    n.in = {x};
    n.geom = g;
    n.angle_set = set;
    Tensor sino({g.rows(set), g.n}, v.data);
    Tensor img = tomo::back_project(sino, nullptr, g, set);
    n.val = Tensor({1, g.n, g.n}, std::move(img.data));
    n.needs_grad = at(x).needs_grad;
    return push(std::move(n));
}

const Tensor& Tape::value(VarId id) const { return at(id).val; }

Tensor Tape::grad(VarId id) const {
    const Node& n = at(id);
    return n.has_adj ? n.adj : Tensor(n.val.shape);
}

void Tape::backward(VarId root) {
    if (at(root).val.numel() != 1)
        throw ShapeError("backward: root must be scalar, got " +
                         Tensor::shape_str(at(root).val.shape));
    Tensor seed({1});
    seed.data[0] = 1.0;
    backward(root, seed);
}

void Tape::backward(VarId root, const Tensor& seed) {
    if (nodes_.empty()) throw StateError("backward before any evaluation");
    if (backward_done_) throw StateError("repeated backward without reset");
    Node& r = at(root);
    if (!seed.same_shape(r.val))
        throw ShapeError("backward: seed " + Tensor::shape_str(seed.shape) + " vs root " +
                         Tensor::shape_str(r.val.shape));
    if (!r.needs_grad) throw StateError("backward: root does not require gradients");
    backward_done_ = true;
    adj_of(r);
    r.adj = seed;
    backprop(root);
}

void Tape::reset() {
    for (auto& n : nodes_) {
        n.has_adj = false;
        n.adj = Tensor();
    }
    backward_done_ = false;
}

void Tape::backprop(VarId root) {
    for (VarId id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.has_adj || !n.needs_grad) continue;
        const Tensor& up = n.adj;
        auto want = [&](int slot) { return at(n.in[slot]).needs_grad; };
        switch (n.op) {
            case Op::Leaf:
                if (n.bound) {
                    Tensor& g = n.bound->grad;
                    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += up.data[i];
                }
                break;
            case Op::Conv2d: {
                const Tensor& x = at(n.in[0]).val;
                const Tensor& w = at(n.in[1]).val;
                if (want(0)) nnk::conv2d_backward_x(w, up, adj_of(at(n.in[0])));
                if (want(1)) nnk::conv2d_backward_w(x, up, adj_of(at(n.in[1])));
                if (want(2)) nnk::conv2d_backward_b(up, adj_of(at(n.in[2])));
                break;
            }
            case Op::AvgPool2: {
                if (!want(0)) break;
                Tensor& dx = adj_of(at(n.in[0]));
                const int c = up.dim(0), h = up.dim(1), w = up.dim(2);
                for (int ch = 0; ch < c; ++ch)
                    for (int y = 0; y < h; ++y)
                        for (int xx = 0; xx < w; ++xx) {
                            double g = 0.25 * up.at3(ch, y, xx);
                            dx.at3(ch, 2 * y, 2 * xx) += g;
                            dx.at3(ch, 2 * y, 2 * xx + 1) += g;
                            dx.at3(ch, 2 * y + 1, 2 * xx) += g;
                            dx.at3(ch, 2 * y + 1, 2 * xx + 1) += g;
                        }
                break;
            }
            case Op::Upsample2: {
                if (!want(0)) break;
                Tensor& dx = adj_of(at(n.in[0]));
                const int c = up.dim(0), h = up.dim(1), w = up.dim(2);
                for (int ch = 0; ch < c; ++ch)
                    for (int y = 0; y < h; ++y)
                        for (int xx = 0; xx < w; ++xx)
                            dx.at3(ch, y / 2, xx / 2) += up.at3(ch, y, xx);
                break;
            }
            case Op::Relu: {
                if (!want(0)) break;
                Tensor& dx = adj_of(at(n.in[0]));
                const Tensor& x = at(n.in[0]).val;
                for (std::size_t i = 0; i < dx.data.size(); ++i)
                    if (x.data[i] > 0.0) dx.data[i] += up.data[i];
                break;
            }
            case Op::Sigmoid: {
                if (!want(0)) break;
                Tensor& dx = adj_of(at(n.in[0]));
                for (std::size_t i = 0; i < dx.data.size(); ++i) {
                    double y = n.val.data[i];
                    dx.data[i] += up.data[i] * y * (1.0 - y);
                }
                break;
            }
            case Op::Concat: {
                std::size_t off = 0;
                for (std::size_t s = 0; s < n.in.size(); ++s) {
                    Node& src = at(n.in[s]);
                    std::size_t len = src.val.numel();
                    if (src.needs_grad) {
                        Tensor& dx = adj_of(src);
                        for (std::size_t i = 0; i < len; ++i) dx.data[i] += up.data[off + i];
                    }
                    off += len;
                }
                break;
            }
            case Op::Add:
                for (int s = 0; s < 2; ++s)
                    if (want(s)) {
                        Tensor& d = adj_of(at(n.in[s]));
                        for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] += up.data[i];
                    }
                break;
            case Op::Mul: {
                const Tensor& a = at(n.in[0]).val;
                const Tensor& b = at(n.in[1]).val;
                if (want(0)) {
                    Tensor& da = adj_of(at(n.in[0]));
                    for (std::size_t i = 0; i < da.data.size(); ++i)
                        da.data[i] += up.data[i] * b.data[i];
                }
                if (want(1)) {
                    Tensor& db = adj_of(at(n.in[1]));
                    for (std::size_t i = 0; i < db.data.size(); ++i)
                        db.data[i] += up.data[i] * a.data[i];
                }
                break;
            }
            case Op::ChannelScale: {
                const Tensor& x = at(n.in[0]).val;
                const Tensor& s = at(n.in[1]).val;
                const std::size_t hw = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
                if (want(0)) {
                    Tensor& dx = adj_of(at(n.in[0]));
                    for (int c = 0; c < x.dim(0); ++c) {
                        double k = s.data[c];
                        for (std::size_t i = 0; i < hw; ++i)
                            dx.data[c * hw + i] += up.data[c * hw + i] * k;
                    }
                }
                if (want(1)) {
                    Tensor& ds = adj_of(at(n.in[1]));
                    for (int c = 0; c < x.dim(0); ++c) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < hw; ++i)
                            acc += up.data[c * hw + i] * x.data[c * hw + i];
                        ds.data[c] += acc;
                    }
                }
                break;
            }
            case Op::Fc: {
                const Tensor& x = at(n.in[0]).val;
                const Tensor& w = at(n.in[1]).val;
                Tensor* dx = want(0) ? &adj_of(at(n.in[0])) : nullptr;
                Tensor* dw = want(1) ? &adj_of(at(n.in[1])) : nullptr;
                Tensor* db = want(2) ? &adj_of(at(n.in[2])) : nullptr;
                nnk::fc_backward(x, w, up, dx, dw, db);
                break;
            }
            case Op::Gap: {
                if (!want(0)) break;
                Tensor& dx = adj_of(at(n.in[0]));
                const Tensor& x = at(n.in[0]).val;
                const std::size_t hw = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
                for (int c = 0; c < x.dim(0); ++c) {
                    double g = up.data[c] / static_cast<double>(hw);
                    for (std::size_t i = 0; i < hw; ++i) dx.data[c * hw + i] += g;
                }
                break;
            }
            case Op::Sum: {
                if (!want(0)) break;
                Tensor& dx = adj_of(at(n.in[0]));
                for (auto& v : dx.data) v += up.data[0];
                break;
            }
            case Op::Scale: {
                if (!want(0)) break;
                Tensor& dx = adj_of(at(n.in[0]));
                for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += n.scalar * up.data[i];
                break;
            }
            case Op::L1Loss: {
                const Tensor& x = at(n.in[0]).val;
                const Tensor& t = at(n.in[1]).val;
                const double g = up.data[0] / static_cast<double>(x.numel());
                if (want(0)) {
                    Tensor& dx = adj_of(at(n.in[0]));
                    for (std::size_t i = 0; i < x.data.size(); ++i) {
                        double diff = x.data[i] - t.data[i];
                        if (diff > 0.0) dx.data[i] += g;
                        else if (diff < 0.0) dx.data[i] -= g;
                    }
                }
                if (want(1)) {
                    Tensor& dt = adj_of(at(n.in[1]));
                    for (std::size_t i = 0; i < x.data.size(); ++i) {
                        double diff = x.data[i] - t.data[i];
                        if (diff > 0.0) dt.data[i] -= g;
                        else if (diff < 0.0) dt.data[i] += g;
                    }
                }
                break;
            }
            case Op::ForwardProject: {
                if (!want(0)) break;
                Tensor& dx = adj_of(at(n.in[0]));
                Tensor sino({n.geom.rows(n.angle_set), n.geom.n}, up.data);
                Tensor img = tomo::back_project(sino, nullptr, n.geom, n.angle_set);
                for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += img.data[i];
                break;
            }
            case Op::BackProject: {
                if (!want(0)) break;
                Tensor& dx = adj_of(at(n.in[0]));
                Tensor img({n.geom.n, n.geom.n}, up.data);
                Tensor sino = tomo::forward_project(img, nullptr, n.geom, n.angle_set);
                for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += sino.data[i];
                break;
            }
        }
    }
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
    if (!(h > 0.0)) throw ValueError("finite_diff_grad: h must be > 0");
    Tensor g(x.shape);
    Tensor probe = x;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        probe.data[i] = x.data[i] + h;
        double fp = f(probe);
        probe.data[i] = x.data[i] - h;
        double fm = f(probe);
        probe.data[i] = x.data[i];
        g.data[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

} // namespace cdi::ad
