#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gg/ae_gripper.hpp"
#include "gg/ae_joint.hpp"
#include "gg/ae_target.hpp"

using namespace gg;

namespace {

std::string tmp_path(const std::string& stem) {
    return std::string(::testing::TempDir()) + "/" + stem;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void expect_checkpoints_identical(const nn::Checkpoint& a, const nn::Checkpoint& b) {
    ASSERT_EQ(a.items().size(), b.items().size());
    for (std::size_t i = 0; i < a.items().size(); ++i) {
        const auto& [an, at] = a.items()[i];
        const auto& [bn, bt] = b.items()[i];
        EXPECT_EQ(an, bn);
        ASSERT_EQ(at.shape, bt.shape) << an;
        ASSERT_EQ(0, std::memcmp(at.data.data(), bt.data.data(), at.data.size() * sizeof(double)))
            << "tensor '" << an << "' differs";
    }
}

std::vector<std::vector<double>> tiny_latents(std::size_t n) {
    const auto ts = generate_target_dataset(n, 910);
    const auto gs = generate_gripper_dataset(n, 911);
    std::vector<std::vector<double>> rows;
    for (const auto& t : ts) {
        const auto a = t.props.to_array();
        rows.emplace_back(a.begin(), a.end());
    }
    Ae1 ae1(31, nn::Normalizer::fit(rows));
    Ae2 ae2(32);
    return build_latent_dataset(ts, gs, ae1, ae2);
}

}  // namespace

TEST(Ae1Training, RejectsTinyDataset) {
    const auto ds = generate_target_dataset(1, 900);
    nn::TrainConfig cfg;
    EXPECT_THROW(train_ae1(ds, cfg, tmp_path("ae1_reject.csv")), std::invalid_argument);
}

TEST(Ae1Training, SeedDeterminismAndCsvSchedule) {
    const auto ds = generate_target_dataset(6, 901);
    nn::TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 77;
    const auto csv_a = tmp_path("ae1_det_a.csv");
    const auto csv_b = tmp_path("ae1_det_b.csv");
    const auto ra = train_ae1(ds, cfg, csv_a);
    const auto rb = train_ae1(ds, cfg, csv_b);

    EXPECT_EQ(3, ra.epochs_run);
    expect_checkpoints_identical(ra.checkpoint, rb.checkpoint);

    const auto la = read_lines(csv_a);
    const auto lb = read_lines(csv_b);
    ASSERT_EQ(la.size(), lb.size());
    for (std::size_t i = 0; i < la.size(); ++i) EXPECT_EQ(la[i], lb[i]);
    ASSERT_EQ(4u, la.size());  // header + one row per epoch
    EXPECT_EQ("epoch,train_loss,val_loss,val_voxel_acc,val_prop_relerr", la[0]);
}

TEST(Ae1Training, NanAbortKeepsUsableWeights) {
    const auto ds = generate_target_dataset(6, 902);
    nn::TrainConfig cfg;
    cfg.epochs = 5;
    cfg.lr = 1e200;  // guaranteed overflow after the first optimizer step
    cfg.seed = 78;
    const auto r = train_ae1(ds, cfg, tmp_path("ae1_nan.csv"));
    EXPECT_TRUE(r.nan_aborted);

    Ae1 model(r.checkpoint);
    model.set_sample(ds[0].grid, ds[0].props);
    EXPECT_TRUE(std::isfinite(model.run_loss()));
}

TEST(Ae1Training, MemorizesTenSamples) {
    const auto ds = generate_target_dataset(10, 903);
    nn::TrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch = 1;
    cfg.lr = 3e-3;
    cfg.seed = 79;
    cfg.val_fraction = 0.0;   // evaluate on the training set: memorization run
    cfg.stop_val_acc = 99.5;
    const auto r = train_ae1(ds, cfg, tmp_path("ae1_memo.csv"));
    EXPECT_FALSE(r.nan_aborted);
    EXPECT_LE(r.epochs_run, 500);
    EXPECT_GE(r.best_val_acc, 99.0) << "after " << r.epochs_run << " epochs";

    // the saved checkpoint reproduces the score
    Ae1 model(r.checkpoint);
    double acc = 0.0;
    for (const auto& s : ds) {
        const auto d = model.reconstruct(s.grid, s.props);
        acc += voxel_accuracy(d.voxel_probs, s.grid.occ);
    }
    EXPECT_GE(acc / 10.0, 99.0);
}

TEST(Ae2Training, MemorizesTenSamples) {
    const auto ds = generate_gripper_dataset(10, 904);
    nn::TrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch = 1;
    cfg.lr = 3e-3;
    cfg.seed = 80;
    cfg.val_fraction = 0.0;
    cfg.stop_val_acc = 99.5;    // combined score clears this long before the pose does
    cfg.stop_pose_err = 0.0095;  // so the pose-vector fit gates the stop
    const auto r = train_ae2(ds, cfg, tmp_path("ae2_memo.csv"));
    EXPECT_FALSE(r.nan_aborted);

    Ae2 model(r.checkpoint);
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < ds.size(); ++i) all.push_back(i);
    const auto sc = evaluate_ae2(model, ds, all);
    EXPECT_GE(sc.geo_acc, 99.0) << "after " << r.epochs_run << " epochs";
    EXPECT_LT(sc.mean_pose_norm_err, 0.01) << "after " << r.epochs_run << " epochs";
}

TEST(Ae2Training, SeedDeterminism) {
    const auto ds = generate_gripper_dataset(6, 905);
    nn::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 81;
    const auto ra = train_ae2(ds, cfg, tmp_path("ae2_det_a.csv"));
    const auto rb = train_ae2(ds, cfg, tmp_path("ae2_det_b.csv"));
    expect_checkpoints_identical(ra.checkpoint, rb.checkpoint);
}

TEST(Ae3Training, MemorizesTenPairs) {
    const auto latents = tiny_latents(10);
    Ae2 holder(32);
    nn::Checkpoint ae2_ck;
    holder.save_into(ae2_ck);

    Ae3TrainConfig cfg;
    cfg.base.epochs = 4000;
    cfg.base.lr = 2e-3;
    cfg.base.seed = 82;
    cfg.base.val_fraction = 0.0;
    cfg.base.stop_val_acc = 99.5;
    const auto r = train_ae3(latents, ae2_ck, cfg, tmp_path("ae3_memo.csv"));
    EXPECT_FALSE(r.nan_aborted);
    EXPECT_GE(r.best_val_acc, 99.0) << "after " << r.epochs_run << " epochs";
}

TEST(Ae3Training, SeedDeterminismAndCsv) {
    const auto latents = tiny_latents(6);
    Ae2 holder(32);
    nn::Checkpoint ae2_ck;
    holder.save_into(ae2_ck);

    Ae3TrainConfig cfg;
    cfg.base.epochs = 5;
    cfg.base.seed = 83;
    const auto csv_a = tmp_path("ae3_det_a.csv");
    const auto ra = train_ae3(latents, ae2_ck, cfg, csv_a);
    const auto rb = train_ae3(latents, ae2_ck, cfg, tmp_path("ae3_det_b.csv"));
    expect_checkpoints_identical(ra.checkpoint, rb.checkpoint);
    const auto lines = read_lines(csv_a);
    ASSERT_EQ(6u, lines.size());
    EXPECT_EQ("epoch,train_loss,val_loss,val_latent_acc,val_rel_err", lines[0]);
}
