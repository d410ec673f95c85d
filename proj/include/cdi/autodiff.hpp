#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cdi/geometry.hpp"
#include "cdi/tensor.hpp"

namespace cdi::ad {

using VarId = int;

// Learnable tensor: value plus gradient accumulator. Optimizer moments are
// owned by the training module. `proj_domain` selects the learning-rate
// group (projection- vs image-domain modules).
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool proj_domain = false;

    Param(std::string n, std::vector<int> shape, bool proj)
        : name(std::move(n)), value(shape), grad(std::move(shape)), proj_domain(proj) {}
};

class ParamStore {
public:
    Param& create(const std::string& name, std::vector<int> shape, bool proj_domain);
    Param& get(const std::string& name);
    const Param& get(const std::string& name) const;
    bool has(const std::string& name) const;
    std::vector<Param*> all();
    std::vector<const Param*> all() const;
    std::size_t count_values() const;
    void zero_grads();

private:
    std::vector<std::unique_ptr<Param>> items_;
};

enum class Op {
    Leaf,
    Conv2d,
    AvgPool2,
    Upsample2,
    Relu,
    Sigmoid,
    Concat,
    Add,
    Mul,
    ChannelScale,
    Fc,
    Gap,
    Sum,
    Scale,
    L1Loss,
    ForwardProject,
    BackProject,
};

// Reverse-mode tape. Ops evaluate eagerly as they are recorded (values are
// the cached activations); backward() walks the records once in reverse.
// Single-threaded per instance; distinct instances may live on distinct
// threads.
class Tape {
public:
    // Constant leaf; rejects NaN/Inf at the graph boundary.
    VarId input(Tensor t);
    // Differentiable leaf (for gradient checks of non-parameter inputs).
    VarId input_grad(Tensor t);
    // Leaf bound to a parameter; backward() accumulates into p.grad.
    VarId param(Param& p);

    VarId conv2d(VarId x, VarId w, VarId b);
    VarId avg_pool2(VarId x);        // 2x2 mean, [C,H,W] -> [C,H/2,W/2]
    VarId upsample2(VarId x);        // nearest neighbor, [C,H,W] -> [C,2H,2W]
    VarId relu(VarId x);
    VarId sigmoid(VarId x);
    VarId concat(const std::vector<VarId>& xs);  // along channels
    VarId add(VarId a, VarId b);
    VarId mul(VarId a, VarId b);
    VarId channel_scale(VarId x, VarId s);  // x [C,H,W] * s [C]
    VarId fc(VarId x, VarId w, VarId b);
    VarId gap(VarId x);              // global average pool, [C,H,W] -> [C]
    VarId sum_all(VarId x);          // scalar [1]
    VarId scale(VarId x, double k);
    VarId l1_loss(VarId x, VarId target);  // mean |x - target|, scalar [1]
    // Differentiable tomographic nodes (no attenuation; backward is the
    // adjoint operator). x [1,n,n] <-> sinogram [1,A,n].
    VarId forward_project(VarId x, const tomo::Geometry& g, tomo::AngleSet set);
    VarId back_project(VarId x, const tomo::Geometry& g, tomo::AngleSet set);

    const Tensor& value(VarId id) const;
    // Gradient of a node after backward(); zero tensor if it never received
    // adjoint contributions.
    Tensor grad(VarId id) const;

    // Seeds the root with 1 (root must be scalar) and accumulates gradients
    // for every requires-grad node, bound parameters included. A second call
    // without reset() is an error.
    void backward(VarId root);
    void backward(VarId root, const Tensor& seed);
    // Clears adjoints so the same tape can be differentiated again.
    void reset();

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Op op = Op::Leaf;
        std::vector<VarId> in;
        Tensor val;
        Tensor adj;             // lazily allocated during backward
        bool needs_grad = false;
        bool has_adj = false;
        int aux = 0;            // conv kernel size
        double scalar = 0.0;    // Scale factor
        tomo::Geometry geom;
        tomo::AngleSet angle_set = tomo::AngleSet::Full;
        Param* bound = nullptr;
    };

    VarId push(Node n);
    Node& at(VarId id);
    const Node& at(VarId id) const;
    Tensor& adj_of(Node& n);
    void backprop(VarId root_checked);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

// Central-difference gradient oracle: (f(x + h e_i) - f(x - h e_i)) / 2h.
// Independent of the tape; used to verify backward().
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double h);

} // namespace cdi::ad
