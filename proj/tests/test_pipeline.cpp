#include <gtest/gtest.h>

#include <sstream>

#include "nomperf/model_io.hpp"
#include "nomperf/pipeline.hpp"
#include "nomperf/predict.hpp"
#include "nomperf/simgen.hpp"

using namespace nomperf;

namespace {

std::vector<RunRecord> small_corpus(int n_runs = 4, long steps = 600, std::uint64_t seed = 42) {
    ScenarioConfig c;
    c.n_runs = n_runs;
    c.run_steps = steps;
    c.seed = seed;
    return generate_corpus(c);
}

TrainConfig quick_config() {
    TrainConfig c;
    c.hidden_units = 6;
    c.scg.max_cycles = 40;
    c.stride = 5;
    return c;
}

const TrainedArtifact& shared_artifact() {
    static const TrainedArtifact art = train_pipeline(small_corpus(), quick_config());
    return art;
}

}  // namespace

TEST(Pipeline, DefaultsGiveTheReferenceShape) {
    TrainConfig c;
    c.scg.max_cycles = 2;
    c.stride = 20;
    const TrainedArtifact a = train_pipeline(generate_corpus(canonical_scenario()), c);
    EXPECT_EQ(a.model.n_in(), 4);
    EXPECT_EQ(a.model.n_hidden(), 750);
    EXPECT_EQ(a.model.n_out(), 1);
    EXPECT_EQ(a.model.alpha, 0.1);
    EXPECT_EQ(a.model.activation, Activation::Logistic);
}

TEST(Pipeline, ConstantRunIsLearnedExactly) {
    RunRecord r{"flat", {}, 1.0};
    for (int i = 0; i < 200; ++i) r.samples.push_back({static_cast<double>(i), 0.7, 0.55, 0.0});
    TrainConfig c;
    c.hidden_units = 3;
    c.alpha = 0.0;
    c.scg.max_cycles = 500;
    const TrainedArtifact a = train_pipeline({r}, c);
    EXPECT_LT(a.residuals.std, 1e-3);
    EXPECT_LT(a.residuals.mean, 1e-3);
    EXPECT_EQ(a.residuals.count, 200u);
}

TEST(Pipeline, SameInputsSameModelFile) {
    const auto runs = small_corpus();
    EXPECT_EQ(save_model(train_pipeline(runs, quick_config())), save_model(shared_artifact()));
    TrainConfig other = quick_config();
    other.seed = 2;
    EXPECT_NE(save_model(train_pipeline(runs, other)), save_model(shared_artifact()));
}

TEST(Pipeline, HoldoutRunsDoNotTouchTheModel) {
    auto runs = small_corpus(5);
    TrainConfig c = quick_config();
    c.holdout_run_ids = {"run_002"};
    const TrainedArtifact with = train_pipeline(runs, c);
    runs.erase(runs.begin() + 2);
    c.holdout_run_ids.clear();
    const TrainedArtifact without = train_pipeline(runs, c);
    EXPECT_EQ(with, without);
}

TEST(Pipeline, HoldoutDoesNotSetTheScales) {
    auto runs = small_corpus(3);
    for (auto& s : runs[1].samples) s.cmd_speed *= 10.0;  // far larger than the others
    EXPECT_GT(fit_normalization(runs).speed_ref, fit_normalization({runs[0], runs[2]}).speed_ref);
    TrainConfig c = quick_config();
    c.holdout_run_ids = {"run_001"};
    const TrainedArtifact a = train_pipeline(runs, c);
    const std::vector<RunRecord> kept{runs[0], runs[2]};
    EXPECT_EQ(a.normalization, fit_normalization(kept));
}

TEST(Pipeline, ConfigProblems) {
    const auto runs = small_corpus(2);
    TrainConfig c = quick_config();
    c.holdout_run_ids = {"nope"};
    EXPECT_THROW(train_pipeline(runs, c), ConfigError);
    c.holdout_run_ids = {"run_000", "run_001"};
    EXPECT_THROW(train_pipeline(runs, c), EmptyInputError);
    c.holdout_run_ids = {"run_000"};
    c.validation_run_ids = {"run_000"};
    EXPECT_THROW(train_pipeline(runs, c), ConfigError);
    EXPECT_THROW(train_pipeline({}, quick_config()), EmptyInputError);
    EXPECT_THROW(train_pipeline({runs[0], runs[0]}, quick_config()), ConfigError);
    c = quick_config();
    c.hidden_units = 0;
    EXPECT_THROW(train_pipeline(runs, c), ConfigError);
    c = quick_config();
    c.alpha = -0.1;
    EXPECT_THROW(train_pipeline(runs, c), ConfigError);
}

TEST(Pipeline, EarlyStoppingKeepsTheBestValidationModel) {
    const auto runs = small_corpus(4);
    TrainConfig c = quick_config();
    c.scg.max_cycles = 200;
    c.validation_run_ids = {"run_003"};
    c.validate_every = 5;
    c.patience = 2;
    const TrainedArtifact a = train_pipeline(runs, c);
    EXPECT_LE(a.trace.entries.back().cycle, 200);
    // The validation run is excluded from training just like a holdout.
    TrainConfig h = quick_config();
    h.scg.max_cycles = 200;
    h.holdout_run_ids = {"run_003"};
    EXPECT_EQ(a.normalization, train_pipeline(runs, h).normalization);
}

TEST(Pipeline, SgdPathTrains) {
    TrainConfig c = quick_config();
    c.optimizer = Optimizer::Sgd;
    c.sgd.epochs = 5;
    const TrainedArtifact a = train_pipeline(small_corpus(2), c);
    EXPECT_EQ(a.trace.size(), 6u);
    c.sgd.learning_rate = 0.0;
    EXPECT_THROW(train_pipeline(small_corpus(2), c), ConfigError);
}

TEST(ModelFile, RoundTripIsBitExact) {
    const TrainedArtifact& a = shared_artifact();
    const std::string text = save_model(a);
    const TrainedArtifact b = load_model(text);
    EXPECT_EQ(a, b);
    EXPECT_EQ(save_model(b), text);
    const MissionProfile p = profile_of(small_corpus(1).front());
    const auto pa = predict_run(a, p, UtilizationModel::forecast());
    const auto pb = predict_run(b, p, UtilizationModel::forecast());
    EXPECT_EQ(pa.predicted_speed, pb.predicted_speed);
}

TEST(ModelFile, EveryCorruptedByteIsCaught) {
    const std::string text = save_model(shared_artifact());
    const std::size_t cs = text.rfind("checksum ");
    for (std::size_t pos = 20; pos < cs; pos += 97) {
        std::string bad = text;
        bad[pos] = bad[pos] == '1' ? '2' : '1';
        EXPECT_THROW(load_model(bad), ChecksumError) << "byte " << pos;
    }
}

TEST(ModelFile, VersionAndTruncation) {
    std::string text = save_model(shared_artifact());
    std::string legacy = text;
    legacy.replace(0, std::string("nomperf-model 1").size(), "nomperf-model 0");
    EXPECT_THROW(load_model(legacy), VersionError);
    EXPECT_THROW(load_model(text.substr(0, text.size() / 2)), TruncatedError);
    EXPECT_THROW(load_model(text.substr(0, text.size() - 1)), TruncatedError);
    EXPECT_THROW(load_model("hello\n"), FormatError);
    EXPECT_THROW(load_model(""), FormatError);
}

TEST(ModelFile, ValidChecksumOverBrokenPayloadIsAFormatError) {
    std::string body = "nomperf-model 1\ndims 4 x 1\n";
    body += "checksum " + hex_u64(fnv1a64(body)) + "\n";
    EXPECT_THROW(load_model(body), FormatError);
}

TEST(TrainConfigFile, RoundTrip) {
    TrainConfig c;
    c.hidden_units = 50;
    c.alpha = 0.1 / 13.0;
    c.activation = Activation::Tanh;
    c.optimizer = Optimizer::Sgd;
    c.stride = 13;
    c.holdout_run_ids = {"run_019", "run_003"};
    c.scg.max_cycles = 5000;
    c.sgd.learning_rate = 0.002;
    std::istringstream in(to_text(c));
    const TrainConfig b = parse_train_config(in);
    EXPECT_EQ(to_text(b), to_text(c));
    EXPECT_EQ(b.alpha, c.alpha);
    EXPECT_EQ(b.holdout_run_ids, c.holdout_run_ids);
}

TEST(TrainConfigFile, ErrorsCarryTheLine) {
    auto line_of = [](const std::string& text) {
        std::istringstream in(text);
        try {
            parse_train_config(in);
        } catch (const ConfigError& e) {
            return e.line();
        }
        return -1;
    };
    EXPECT_EQ(line_of("version = 1\nhidden_units = many\n"), 2);
    EXPECT_EQ(line_of("version = 1\n\nactivation = relu\n"), 3);
    EXPECT_EQ(line_of("version = 1\noptimiser = scg\n"), 2);
    EXPECT_EQ(line_of("version = 9\n"), 1);
    std::istringstream neg("version = 1\nhidden_units = 0\n");
    EXPECT_THROW(parse_train_config(neg), ConfigError);
}
