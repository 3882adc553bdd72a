// Copyright 2026 The envasr Authors.
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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "envasr/checkpoint.hpp"
#include "envasr/config.hpp"
#include "envasr/corpus.hpp"
#include "envasr/features.hpp"
#include "envasr/pipeline.hpp"
#include "envasr/serialize.hpp"
#include "test_util.hpp"

namespace envasr {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::string small_run_config(const std::string& stage, const std::string& extra = "") {
  return "stage = " + stage +
         "\n"
         "seed = 3\n"
         "paths.data_dir = data\n"
         "paths.codebook_dir = codebooks\n"
         "paths.checkpoint_dir = ckpt\n"
         "train.batch_size = 2\n"
         "train.checkpoint_every = 100\n"
         "tokenize.video_k = 8\n"
         "tokenize.max_iters = 5\n"
         "avbert.model_dim = 16\n"
         "avbert.num_blocks = 1\n"
         "avbert.heads = 2\n"
         "asr.model_dim = 16\n"
         "asr.num_blocks = 1\n"
         "asr.heads = 2\n"
         "asr.conv_kernel = 3\n" +
         (extra.find("train.max_steps") == std::string::npos ? "train.max_steps = 4\n" : "") +
         (extra.find("tokenize.audio_k") == std::string::npos ? "tokenize.audio_k = 8\n" : "") + extra;
}

/// Corpus of `n` utterances plus a config file in a fresh directory.
struct Workspace {
  explicit Workspace(const std::string& tag, std::size_t n = 6) : dir(tag) {
    corpus::write_corpus(corpus::generate_synthetic_corpus(n, 17), dir / "data");
  }
  RunConfig config(const std::string& stage, const std::string& extra = "") const {
    return parse_config(small_run_config(stage, extra), dir.path());
  }
  TempDir dir;
};

std::string read_text(const fs::path& p) { return read_file(p); }

// ---- config ---------------------------------------------------------------

TEST(Config, DefaultsAndRoundTrip) {
  const RunConfig d = parse_config("");
  EXPECT_DOUBLE_EQ(d.optim.lr, 3e-4);
  EXPECT_DOUBLE_EQ(d.optim.beta2, 0.99);
  EXPECT_EQ(d.train_manifest(), fs::path("data") / "manifest.tsv");
  EXPECT_EQ(d.eval_manifest(), d.train_manifest());
  EXPECT_EQ(d.pretrain_checkpoint(), fs::path("checkpoints") / "avbert.ckpt");

  const RunConfig c = parse_config(small_run_config("train_asr", "optim.lr = 0.00123\nasr.fusion_mode = self_attention_baseline\n"));
  const std::string text = format_config(c);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(format_config(back), text);
  EXPECT_EQ(back.stage, Stage::kTrainAsr);
  EXPECT_DOUBLE_EQ(back.optim.lr, 0.00123);
  EXPECT_EQ(back.asr.fusion_mode, asr::FusionMode::kSelfAttentionBaseline);
  EXPECT_EQ(back.avbert.model_dim, 16u);
}

TEST(Config, RelativePathsResolveAgainstBaseDir) {
  const RunConfig c = parse_config("paths.data_dir = corpus\n", "/tmp/run");
  EXPECT_EQ(c.paths.data_dir, fs::path("/tmp/run/corpus"));
  EXPECT_EQ(parse_config("paths.data_dir = /abs\n", "/tmp/run").paths.data_dir, fs::path("/abs"));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("train.batch_size = -1\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("train.batch_size = 0\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("train.bach_size = 4\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("optim.lr = fast\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("optim.lr = -1\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("seed = 1\nseed = 2\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("stage = finetune\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("no equals sign\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("mask.width_init = 2\n"), std::invalid_argument);
  EXPECT_NO_THROW(parse_config("# comment only\n\n  seed = 4  # trailing\n"));
}

TEST(Config, PresetsApplyBeforeExplicitKeys) {
  const RunConfig c = parse_config("asr.preset = full\nasr.num_blocks = 3\n");
  EXPECT_EQ(c.asr.model_dim, 1024u);
  EXPECT_EQ(c.asr.num_blocks, 3u);
  const RunConfig p = parse_config("avbert.preset = full\n");
  EXPECT_EQ(p.avbert.model_dim, 128u);
  EXPECT_EQ(p.tokenize.audio_k, 4096u);
  EXPECT_EQ(p.tokenize.video_k, 8192u);
}

// ---- checkpoints ----------------------------------------------------------

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  TempDir dir("ckpt");
  avbert::AvBertModel model(avbert::AvBertConfig::toy(24));
  std::mt19937_64 rng(1);
  avbert::MultimodalBatch b;
  b.audio.patches = testing::random_tensor({6, 192}, rng);
  b.labels = {1, 2, 3, 4, 5, 6};
  b.mask = sample_mask(6, 1, 0.5, rng);
  b.mask.mask[0] = 1;
  const std::vector<avbert::MultimodalBatch> batches{b};
  avbert::pretrain_step(model, batches, {}, 0, 1);

  const Checkpoint ck = capture_checkpoint("avbert", 1, "seed = 1\n", model.parameters());
  save_checkpoint(dir / "a.ckpt", ck);
  const Checkpoint loaded = load_checkpoint(dir / "a.ckpt");
  save_checkpoint(dir / "b.ckpt", loaded);
  EXPECT_EQ(read_text(dir / "a.ckpt"), read_text(dir / "b.ckpt"));
  EXPECT_EQ(loaded.step, 1u);
  EXPECT_EQ(loaded.adam_steps, 1u);

  avbert::AvBertModel other(avbert::AvBertConfig::toy(24));
  restore_checkpoint(loaded, other.parameters());
  EXPECT_EQ(parameter_hash(other.parameters()), parameter_hash(model.parameters()));
  // Continuing from the restored copy matches continuing the original.
  const auto r1 = avbert::pretrain_step(model, batches, {}, 1, 1);
  const auto r2 = avbert::pretrain_step(other, batches, {}, 1, 1);
  EXPECT_EQ(r1.loss, r2.loss);
  EXPECT_EQ(parameter_hash(other.parameters()), parameter_hash(model.parameters()));
}

TEST(Checkpoint, MismatchedModelIsRejected) {
  const avbert::AvBertModel model(avbert::AvBertConfig::toy(24));
  const Checkpoint ck = capture_checkpoint("avbert", 0, "", model.parameters());
  avbert::AvBertModel wider(avbert::AvBertConfig::toy(30));
  EXPECT_THROW(restore_checkpoint(ck, wider.parameters()), std::runtime_error);
  asr::ConformerTransducer asr_model(asr::ConformerConfig::toy(32, 8));
  EXPECT_THROW(restore_checkpoint(ck, asr_model.parameters()), std::runtime_error);
}

TEST(Checkpoint, CorruptBytesAreRejected) {
  ParameterSet p;
  p.add("w", Tensor::full({2, 3}, 1.5));
  const std::string bytes = encode_checkpoint(capture_checkpoint("asr", 4, "", p));
  EXPECT_EQ(decode_checkpoint(bytes).tensors.at("w").at(1, 2), 1.5);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), std::runtime_error);
  EXPECT_THROW(decode_checkpoint("not a checkpoint"), std::runtime_error);
  std::string bad = bytes;
  bad.replace(bad.find("step 4"), 6, "step x");
  EXPECT_THROW(decode_checkpoint(bad), std::runtime_error);
}

// ---- corpus ---------------------------------------------------------------

TEST(Corpus, GenerationIsDeterministic) {
  const auto a = corpus::generate_synthetic_corpus(5, 9), b = corpus::generate_synthetic_corpus(5, 9);
  const auto c = corpus::generate_synthetic_corpus(5, 10);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.utterances[i].audio.samples, b.utterances[i].audio.samples);
    EXPECT_EQ(a.utterances[i].labels, b.utterances[i].labels);
    EXPECT_GE(a.utterances[i].labels.size(), 3u);
    EXPECT_LE(a.utterances[i].labels.size(), 10u);
  }
  EXPECT_NE(a.utterances[0].audio.samples, c.utterances[0].audio.samples);
}

TEST(Corpus, ToneEnergyPeaksAtItsFrequency) {
  for (std::size_t s = 0; s < corpus::kNumSymbols; ++s) {
    const auto tone = corpus::render_tone(s);
    std::vector<std::complex<Real>> buf(2048, 0.0);
    for (std::size_t i = 0; i < std::min(tone.size(), buf.size()); ++i) buf[i] = tone[i];
    features::fft(buf);
    std::size_t best = 1;
    for (std::size_t k = 1; k < 1024; ++k)
      if (std::abs(buf[k]) > std::abs(buf[best])) best = k;
    const Real hz = static_cast<Real>(best) * features::kSampleRate / 2048.0;
    EXPECT_NEAR(hz, corpus::symbol_frequencies()[s], features::kSampleRate / 2048.0) << "symbol " << s;
  }
}

TEST(Corpus, WordsRoundTrip) {
  EXPECT_EQ(corpus::labels_to_text({0, 7, 3}), "zero seven three");
  EXPECT_EQ(corpus::text_to_labels("zero seven three"), (std::vector<std::size_t>{0, 7, 3}));
  EXPECT_THROW(corpus::symbol_index("eight"), std::invalid_argument);
}

TEST(Corpus, WrittenLayout) {
  TempDir dir("corpus");
  corpus::write_corpus(corpus::generate_synthetic_corpus(16, 2), dir / "data");
  const auto entries = corpus::read_manifest(dir / "data" / "manifest.tsv");
  ASSERT_EQ(entries.size(), 16u);
  const auto envs = corpus::read_environments(dir / "data" / "environments.tsv");
  ASSERT_EQ(envs.size(), 16u);
  for (const auto& e : entries) {
    EXPECT_TRUE(fs::exists(e.audio_path));
    EXPECT_TRUE(e.audio_path.is_absolute());
  }
  std::size_t clips = 0;
  for (const auto& f : fs::directory_iterator(dir / "data" / "clips")) clips += f.path().extension() == ".clip";
  EXPECT_EQ(clips, 16u);
  const auto wave = features::read_wav(entries[0].audio_path);
  EXPECT_EQ(wave.sample_rate, features::kSampleRate);
}

// ---- stages ---------------------------------------------------------------

TEST(Pipeline, TokenizeWritesCodebooksAndIsReproducible) {
  Workspace ws("tokenize");
  RunConfig c = ws.config("tokenize", "tokenize.audio_k = 64\n");
  std::ostringstream log;
  const pipeline::Assets assets = pipeline::run_tokenize(c, log);
  EXPECT_EQ(assets.audio.centers.shape(), (Shape{64, 192}));
  EXPECT_EQ(assets.video.centers.rows(), 8u);
  EXPECT_EQ(assets.vocab_size(), 72u);
  EXPECT_TRUE(fs::exists(c.paths.codebook_dir / "vocab.txt"));
  const std::string tokens = read_text(c.paths.codebook_dir / "tokens.tsv");
  pipeline::run_tokenize(c, log);
  EXPECT_EQ(read_text(c.paths.codebook_dir / "tokens.tsv"), tokens);

  const pipeline::Assets loaded = pipeline::load_assets(c);
  const auto utts = pipeline::load_corpus(c.train_manifest(), c.video, true);
  const auto ids = pipeline::tokenize_utterance(loaded, utts[0]);
  EXPECT_EQ(ids.size(), utts[0].audio.patches.rows() + utts[0].video->patches.rows());
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i] < 64, i < utts[0].audio.patches.rows());
}

TEST(Pipeline, PretrainResumeMatchesUninterruptedRun) {
  Workspace ws("resume");
  std::ostringstream log;
  RunConfig full = ws.config("pretrain", "train.max_steps = 6\n");
  full.paths.checkpoint_dir = ws.dir / "full";
  pipeline::run_pretraining(full, log);

  RunConfig part = ws.config("pretrain", "train.max_steps = 3\n");
  part.paths.checkpoint_dir = ws.dir / "part";
  pipeline::run_pretraining(part, log);
  part.train.max_steps = 6;
  part.train.resume = true;
  std::ostringstream resumed;
  pipeline::run_pretraining(part, resumed);
  EXPECT_NE(resumed.str().find("resume step=3"), std::string::npos);

  const auto a = pipeline::load_avbert(full.paths.checkpoint_dir / "avbert.ckpt");
  const auto b = pipeline::load_avbert(part.paths.checkpoint_dir / "avbert.ckpt");
  EXPECT_EQ(parameter_hash(a.parameters()), parameter_hash(b.parameters()));
}

TEST(Pipeline, ResumeAtStageBoundaryUsesWiderSpans) {
  Workspace ws("boundary");
  std::ostringstream log;
  RunConfig c = ws.config("pretrain", "train.max_steps = 1\n");
  pipeline::run_pretraining(c, log);
  const fs::path path = c.paths.checkpoint_dir / "avbert.ckpt";
  Checkpoint ck = load_checkpoint(path);
  ck.step = 10000;
  save_checkpoint(path, ck);
  c.train.max_steps = 10001;
  c.train.resume = true;
  std::ostringstream resumed;
  pipeline::run_pretraining(c, resumed);
  EXPECT_NE(resumed.str().find("step=10000 "), std::string::npos);
  EXPECT_NE(resumed.str().find("mask_w=3 mask_p=0.150000"), std::string::npos) << resumed.str();
}

TEST(Pipeline, BaselineAsrRunsWithoutPretraining) {
  Workspace ws("baseline");
  RunConfig c = ws.config("train_asr", "asr.fusion_mode = self_attention_baseline\ntrain.max_steps = 2\n");
  std::ostringstream log;
  const auto r = pipeline::run_asr_training(c, log);
  EXPECT_EQ(r.final_step, 2u);
  EXPECT_FALSE(r.avbert_hash_before.has_value());
  EXPECT_FALSE(fs::exists(c.pretrain_checkpoint()));

  const auto e1 = pipeline::run_eval(c, r.checkpoint, log);
  const std::string hyps = read_text(c.output_dir() / "hypotheses.txt");
  const std::string report = read_text(c.output_dir() / "wer.txt");
  const auto e2 = pipeline::run_eval(c, r.checkpoint, log);
  EXPECT_EQ(e1.hypotheses, e2.hypotheses);
  EXPECT_EQ(read_text(c.output_dir() / "hypotheses.txt"), hyps);
  EXPECT_EQ(read_text(c.output_dir() / "wer.txt"), report);
  EXPECT_EQ(e1.hypotheses.size(), 6u);
  EXPECT_EQ(report, format_wer_report(e1.counts) + "\n");
}

TEST(Pipeline, CrossAttentionNeedsPretrainedEncoderAndLeavesItUnchanged) {
  Workspace ws("fusion");
  std::ostringstream log;
  RunConfig asr_cfg = ws.config("train_asr", "train.max_steps = 3\n");
  EXPECT_THROW(pipeline::run_asr_training(asr_cfg, log), std::runtime_error);
  pipeline::run_pretraining(ws.config("pretrain", "train.max_steps = 2\n"), log);
  const std::string before = read_text(asr_cfg.pretrain_checkpoint());
  const auto r = pipeline::run_asr_training(asr_cfg, log);
  ASSERT_TRUE(r.avbert_hash_before && r.avbert_hash_after);
  EXPECT_EQ(*r.avbert_hash_before, *r.avbert_hash_after);
  EXPECT_EQ(read_text(asr_cfg.pretrain_checkpoint()), before);
  EXPECT_NE(log.str().find("avbert_hash="), std::string::npos);
}

TEST(Pipeline, PooledWerOverTwoUtterances) {
  const std::vector<std::vector<std::string>> refs{split_words("a b c"), split_words("d e")};
  const std::vector<std::vector<std::string>> hyps{split_words("a x c"), split_words("d")};
  const EditCounts c = pipeline::corpus_counts(refs, hyps);
  EXPECT_EQ(c.substitutions, 1u);
  EXPECT_EQ(c.deletions, 1u);
  EXPECT_EQ(c.reference_words, 5u);
  EXPECT_DOUBLE_EQ(c.rate(), 0.4);
  EXPECT_THROW(pipeline::corpus_counts(refs, std::span(hyps).first(1)), std::invalid_argument);
}

TEST(Pipeline, EvalRejectsEmptyEvalSet) {
  Workspace ws("empty");
  RunConfig c = ws.config("train_asr", "asr.fusion_mode = self_attention_baseline\ntrain.max_steps = 1\n");
  std::ostringstream log;
  const auto r = pipeline::run_asr_training(c, log);
  corpus::write_manifest(ws.dir / "empty.tsv", {});
  c.paths.eval_manifest = ws.dir / "empty.tsv";
  EXPECT_THROW(pipeline::run_eval(c, r.checkpoint, log), std::runtime_error);
}

}  // namespace
}  // namespace envasr
