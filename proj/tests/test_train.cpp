#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cdi/train.hpp"

using namespace cdi;
using namespace cdi::train;
namespace fs = std::filesystem;

namespace {

tomo::Geometry tiny_geom() { return tomo::Geometry{16, 1.0, 8, 5}; }

sim::DatasetConfig tiny_config() {
    sim::DatasetConfig cfg;
    cfg.geom = tiny_geom();
    cfg.phantom.total_counts = 2e4;
    cfg.phantom.body_a_min = 5.0;
    cfg.phantom.body_a_max = 6.5;
    cfg.phantom.body_b_min = 4.5;
    cfg.phantom.body_b_max = 6.0;
    cfg.phantom.myo_outer_min = 2.0;
    cfg.phantom.myo_outer_max = 2.6;
    cfg.phantom.myo_thick_min = 0.8;
    cfg.phantom.myo_thick_max = 1.2;
    cfg.phantom.myo_offset_max = 1.0;
    cfg.phantom.lung_a_min = 1.0;
    cfg.phantom.lung_a_max = 1.5;
    cfg.phantom.lung_b_min = 1.5;
    cfg.phantom.lung_b_max = 2.0;
    cfg.phantom.spine_radius = 0.8;
    cfg.mlem_iterations = 8;
    return cfg;
}

const sim::Dataset& tiny_dataset() {
    static sim::Dataset ds = [] {
        auto dir = fs::temp_directory_path() / "cdi_test_train" / "ds";
        fs::remove_all(dir);
        sim::DatasetConfig cfg = tiny_config();
        cfg.split = sim::SplitFractions{0.5, 0.25};
        sim::build_dataset(dir.string(), 8, 4242, cfg, false);
        return sim::load_dataset(dir.string());
    }();
    return ds;
}

TrainConfig small_train_config() {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 2;
    cfg.seed = 7;
    cfg.variant = nn::Variant::Full;
    cfg.iterations = 1;
    cfg.unet_depth = 2;
    cfg.unet_base_width = 2;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("lr schedule") {
    CHECK(lr_at_epoch(1e-3, 0.99, 0) == 1e-3);
    CHECK(lr_at_epoch(1e-3, 0.99, 50) == doctest::Approx(6.05e-4).epsilon(1e-3));
    CHECK(lr_at_epoch(5e-4, 1.0, 123) == 5e-4);
    CHECK_THROWS_AS(lr_at_epoch(1e-3, 0.99, -1), ValueError);
}

TEST_CASE("loss is zero for perfect predictions and adds constant offsets") {
    tomo::Geometry g = tiny_geom();
    ad::Tape t;
    Tensor tp({1, g.angles_full, g.n});
    tp.fill(2.0);
    Tensor tm({1, g.n, g.n});
    tm.fill(0.1);

    nn::CDINet::Outputs perfect;
    perfect.proj = {t.input(tp), t.input(tp)};
    perfect.mu = {t.input(tm), t.input(tm)};
    auto lb = total_loss(t, perfect, t.input(tp), t.input(tm), 0.5, 0.5);
    CHECK(lb.value == 0.0);

    Tensor off = tp;
    for (auto& v : off.data) v += 1.0;
    nn::CDINet::Outputs shifted;
    shifted.proj = {t.input(off), t.input(off)};
    shifted.mu = {t.input(tm), t.input(tm)};
    auto lb2 = total_loss(t, shifted, t.input(tp), t.input(tm), 0.5, 0.5);
    CHECK(lb2.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lb2.proj_part == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lb2.mu_part == 0.0);

    nn::CDINet::Outputs bad;
    bad.proj = {t.input(tp)};
    bad.mu = {};
    CHECK_THROWS_AS(total_loss(t, bad, t.input(tp), t.input(tm), 0.5, 0.5), ShapeError);
}

TEST_CASE("adam: zero gradient leaves parameters, moments decay") {
    ad::ParamStore store;
    ad::Param& p = store.create("p", {2}, false);
    p.value = Tensor({2}, {1.0, -2.0});
    Adam adam(store);

    SUBCASE("fresh state does not move on a zero gradient") {
        Tensor before = p.value;
        adam.step(1e-2, 1e-2);
        CHECK(p.value.data == before.data);
    }

    SUBCASE("preloaded moments decay by the betas") {
        adam.restore(0, Tensor({2}, {1.0, 1.0}), Tensor({2}, {4.0, 4.0}));
        adam.step(0.0, 0.0);  // zero lr isolates the moment update
        CHECK(adam.moment1(0).data[0] == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(adam.moment2(0).data[0] == doctest::Approx(0.999 * 4.0).epsilon(1e-12));
    }
}

TEST_CASE("adam first step moves by about lr") {
    ad::ParamStore store;
    ad::Param& p = store.create("p", {1}, false);
    p.value.data[0] = 0.0;
    Adam adam(store);
    p.grad.data[0] = 1.0;
    adam.step(0.0, 1e-2);
    CHECK(std::abs(p.value.data[0] + 1e-2) <= 1e-8);  // update == -lr up to eps
    CHECK(p.grad.data[0] == 0.0);                     // consumed
}

TEST_CASE("adam aborts on non-finite gradients") {
    ad::ParamStore store;
    ad::Param& p = store.create("weights/w", {1}, false);
    Adam adam(store);
    p.grad.data[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(adam.step(1e-3, 1e-3), doctest::Contains("weights/w"), ValueError);
}

TEST_CASE("one epoch on two samples: one log row, one checkpoint") {
    auto dir = fs::temp_directory_path() / "cdi_test_train" / "two";
    fs::remove_all(dir);
    sim::DatasetConfig cfg = tiny_config();
    cfg.split = sim::SplitFractions{1.0, 0.0};  // no val split
    sim::build_dataset((dir / "ds").string(), 2, 99, cfg, false);
    auto ds = sim::load_dataset((dir / "ds").string());

    auto result = cdi::train::train(small_train_config(), ds, (dir / "run").string());
    CHECK(result.log_rows == 1);
    CHECK(fs::exists(result.checkpoint_dir + "/index.json"));

    std::string csv = slurp(result.metrics_csv);
    CHECK(csv.rfind("epoch,split,loss,loss_proj,loss_mu,lr_proj,lr_img\n", 0) == 0);
    CHECK(csv.find("0,train,") != std::string::npos);
    CHECK(csv.find(",val,") == std::string::npos);
}

TEST_CASE("best checkpoint tracks the minimum logged val loss") {
    auto dir = fs::temp_directory_path() / "cdi_test_train" / "best";
    fs::remove_all(dir);
    TrainConfig cfg = small_train_config();
    cfg.epochs = 4;
    auto result = cdi::train::train(cfg, tiny_dataset(), (dir / "run").string());

    // Parse val rows back out of the log.
    std::ifstream is(result.metrics_csv);
    std::string line;
    std::getline(is, line);  // header
    double min_val = std::numeric_limits<double>::infinity();
    while (std::getline(is, line)) {
        if (line.find(",val,") == std::string::npos) continue;
        auto a = line.find(",val,") + 5;
        min_val = std::min(min_val, std::stod(line.substr(a)));
    }
    CHECK(result.best_val_loss == doctest::Approx(min_val).epsilon(1e-12));
}

TEST_CASE("training loss decreases on the toy dataset") {
    auto dir = fs::temp_directory_path() / "cdi_test_train" / "decrease";
    fs::remove_all(dir);
    TrainConfig cfg = small_train_config();
    cfg.epochs = 6;
    auto result = cdi::train::train(cfg, tiny_dataset(), (dir / "run").string());

    std::ifstream is(result.metrics_csv);
    std::string line;
    std::getline(is, line);
    std::vector<double> train_loss;
    while (std::getline(is, line)) {
        auto a = line.find(",train,");
        if (a == std::string::npos) continue;
        train_loss.push_back(std::stod(line.substr(a + 7)));
    }
    REQUIRE(train_loss.size() == 6);
    CHECK(train_loss[5] < train_loss[0]);
}

TEST_CASE("training is bitwise deterministic given the seed") {
    auto dir = fs::temp_directory_path() / "cdi_test_train" / "det";
    fs::remove_all(dir);
    TrainConfig cfg = small_train_config();
    cfg.epochs = 2;
    auto r1 = cdi::train::train(cfg, tiny_dataset(), (dir / "a").string());
    auto r2 = cdi::train::train(cfg, tiny_dataset(), (dir / "b").string());
    CHECK(slurp(r1.metrics_csv) == slurp(r2.metrics_csv));

    // Identical checkpoint payloads, file by file.
    for (const auto& e : fs::recursive_directory_iterator(r1.checkpoint_dir)) {
        if (!e.is_regular_file()) continue;
        auto rel = fs::relative(e.path(), r1.checkpoint_dir);
        CHECK(slurp(e.path().string()) == slurp((fs::path(r2.checkpoint_dir) / rel).string()));
    }
}

TEST_CASE("gradients reach every parameter") {
    const auto& ds = tiny_dataset();
    const tomo::Geometry& g = ds.config.geom;

    ad::ParamStore store;
    nn::CDINetConfig ncfg;
    ncfg.iterations = 2;
    ncfg.unet_depth = 2;
    ncfg.unet_base_width = 2;
    ncfg.geom = g;
    nn::CDINet net(store, ncfg, 5);

    for (const auto* e : ds.split_entries("train")) {
        auto s = prep_sample(sim::load_sample(ds, *e), g);
        ad::Tape t;
        auto outs = net.forward(t, t.input(s.p_l), t.input(s.i_l));
        auto lb = total_loss(t, outs, t.input(s.target_p), t.input(s.target_mu), 0.5, 0.5);
        t.backward(lb.total);
    }
    for (auto* p : store.all()) {
        double mag = 0.0;
        for (double v : p->grad.data) mag += std::abs(v);
        INFO("parameter ", p->name);
        CHECK(mag > 0.0);
    }
}

TEST_CASE("checkpoint round trip restores parameters and optimizer state") {
    ad::ParamStore s1;
    nn::CDINetConfig ncfg;
    ncfg.iterations = 1;
    ncfg.unet_depth = 2;
    ncfg.unet_base_width = 2;
    ncfg.geom = tiny_geom();
    nn::CDINet n1(s1, ncfg, 13);
    Adam a1(s1);
    for (auto* p : s1.all()) {
        p->grad.fill(0.25);
    }
    a1.step(1e-3, 1e-3);

    auto dir = fs::temp_directory_path() / "cdi_test_train" / "ckpt";
    fs::remove_all(dir);
    save_checkpoint(dir.string(), s1, &a1, R"({"note":"test"})");

    ad::ParamStore s2;
    nn::CDINet n2(s2, ncfg, 999);  // different init, to be overwritten
    Adam a2(s2);
    std::string meta = load_checkpoint(dir.string(), s2, &a2);
    CHECK(meta.find("test") != std::string::npos);
    CHECK(a2.steps() == 1);
    auto p1 = s1.all();
    auto p2 = s2.all();
    for (std::size_t i = 0; i < p1.size(); ++i) {
        CHECK(p1[i]->value.data == p2[i]->value.data);
        CHECK(a1.moment1(i).data == a2.moment1(i).data);
    }
}
