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

#include "envasr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "envasr/checkpoint.hpp"
#include "envasr/corpus.hpp"
#include "envasr/ops.hpp"
#include "envasr/params.hpp"
#include "envasr/serialize.hpp"

namespace envasr::pipeline {

namespace fs = std::filesystem;

namespace {

std::string fixed(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

std::string hex64(std::uint64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

fs::path whitener_path(const RunConfig& c) { return c.paths.codebook_dir / "whitener.tensor"; }
fs::path audio_codebook_path(const RunConfig& c) { return c.paths.codebook_dir / "audio.codebook"; }
fs::path video_codebook_path(const RunConfig& c) { return c.paths.codebook_dir / "video.codebook"; }

// Fixed per-run visiting order; batch b of step s takes positions
// s * batch_size + b (mod N), so a resumed run sees the same data.
std::vector<std::size_t> data_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, "data"));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)]);
  }
  return order;
}

template <typename T>
std::vector<T> pick_batch(const std::vector<T>& items, const std::vector<std::size_t>& order, std::uint64_t step,
                          std::size_t batch_size) {
  std::vector<T> out;
  out.reserve(batch_size);
  for (std::size_t j = 0; j < batch_size; ++j) {
    out.push_back(items[order[(step * batch_size + j) % order.size()]]);
  }
  return out;
}

Tensor stack_audio(const std::vector<CorpusUtterance>& utts, const features::Whitener* whitener) {
  std::vector<Tensor> rows;
  rows.reserve(utts.size());
  for (const auto& u : utts) rows.push_back(whitener ? features::whiten_clip(u.audio, *whitener).patches : u.audio.patches);
  return concat_rows(rows);
}

features::Whitener load_or_fit_whitener(const RunConfig& c, const std::vector<CorpusUtterance>& train,
                                        std::ostream& log) {
  if (fs::exists(whitener_path(c))) return features::whitener_from_tensor(read_tensor_file(whitener_path(c)));
  log << "whitener fitted on training audio (no " << whitener_path(c).generic_string() << ")\n";
  return features::fit_whitener(stack_audio(train, nullptr));
}

std::vector<std::string> words_of(const std::vector<std::size_t>& labels) {
  std::vector<std::string> out;
  for (std::size_t y : labels) out.push_back(corpus::symbol_words().at(y));
  return out;
}

std::vector<std::size_t> labels_of(const std::vector<std::string>& words) {
  std::vector<std::size_t> out;
  for (const auto& w : words) out.push_back(corpus::symbol_index(w));
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

avbert::EnvEmbeddings cached_env(const avbert::AvBertModel& model, const features::AudioPatchSeq& audio,
                                 const fs::path& cache_file) {
  if (fs::exists(cache_file)) return {read_tensor_file(cache_file, DType::kF64), true};
  avbert::EnvEmbeddings env = model.extract_env_embeddings(audio);
  write_tensor_file(cache_file, env.vectors, DType::kF64);
  return env;
}

struct AsrData {
  std::vector<asr::Utterance> utterances;
  std::vector<std::vector<std::string>> references;
};

// The cache key covers both the frozen encoder and the feature whitening,
// the two inputs env embeddings depend on.
fs::path env_cache_dir(const RunConfig& c, const avbert::AvBertModel& model, const features::Whitener& w) {
  const Tensor wt = features::whitener_to_tensor(w);
  const std::uint64_t key = fnv1a(encode_values(wt.data(), DType::kF64), parameter_hash(model.parameters()));
  return c.paths.checkpoint_dir / "env_cache" / hex64(key);
}

AsrData prepare_asr_data(const RunConfig& c, const std::vector<CorpusUtterance>& utts, const features::Whitener& w,
                         const avbert::AvBertModel* model) {
  AsrData data;
  fs::path cache;
  if (model) {
    cache = env_cache_dir(c, *model, w);
    fs::create_directories(cache);
  }
  for (const auto& u : utts) {
    asr::Utterance out;
    out.features = features::whiten_clip(u.audio, w);
    out.labels = labels_of(u.words);
    if (model) out.env = cached_env(*model, out.features, cache / (u.id + ".tensor"));
    data.utterances.push_back(std::move(out));
    data.references.push_back(u.words);
  }
  return data;
}

EvalResult decode_all(const asr::ConformerTransducer& model, const AsrData& data) {
  EvalResult result;
  std::vector<std::vector<std::string>> hyps;
  for (const auto& utt : data.utterances) {
    hyps.push_back(words_of(model.greedy_decode(utt)));
    result.hypotheses.push_back(join(hyps.back()));
  }
  result.counts = corpus_counts(data.references, hyps);
  return result;
}

avbert::AvBertConfig effective_avbert(const RunConfig& c, const Assets& assets) {
  avbert::AvBertConfig a = c.avbert;
  a.vocab_size = assets.vocab_size();
  a.seed = c.seed;
  return a;
}

}  // namespace

features::VideoPatchSeq prepare_video(const features::VideoClip& clip, const VideoConfig& video) {
  features::VideoClip c = features::center_crop_resize(clip, video.frame_size);
  c = features::reduce_frame_rate(c, video.frame_rate);
  return features::extract_video_patches(features::truncate_frames(c));
}

std::vector<CorpusUtterance> load_corpus(const fs::path& manifest, const VideoConfig& video, bool with_video) {
  const auto entries = corpus::read_manifest(manifest);
  std::map<std::string, corpus::EnvironmentEntry> envs;
  if (with_video) {
    for (auto& [id, e] : corpus::read_environments(manifest.parent_path() / "environments.tsv")) envs[id] = e;
  }
  std::vector<CorpusUtterance> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    CorpusUtterance u;
    u.id = e.id;
    u.words = e.words;
    u.audio = features::stack_frames(features::compute_lfbe(features::read_wav(e.audio_path)));
    if (with_video) {
      auto it = envs.find(e.id);
      if (it == envs.end()) throw std::runtime_error("no clip listed for utterance '" + e.id + "'");
      u.environment = it->second.environment;
      u.video = prepare_video({read_tensor_file(it->second.clip_path), features::kVideoFrameRate}, video);
    }
    out.push_back(std::move(u));
  }
  return out;
}

bool assets_exist(const RunConfig& c) {
  return fs::exists(whitener_path(c)) && fs::exists(audio_codebook_path(c)) && fs::exists(video_codebook_path(c));
}

Assets load_assets(const RunConfig& c) {
  if (!assets_exist(c)) {
    throw std::runtime_error("codebooks missing in " + c.paths.codebook_dir.string() + "; run tokenize first");
  }
  return {features::whitener_from_tensor(read_tensor_file(whitener_path(c))), vq::load_codebook(audio_codebook_path(c)),
          vq::load_codebook(video_codebook_path(c))};
}

std::vector<std::size_t> tokenize_utterance(const Assets& assets, const CorpusUtterance& utt) {
  std::vector<std::size_t> ids = vq::assign_tokens(assets.audio, features::whiten_clip(utt.audio, assets.whitener).patches).ids;
  if (utt.video) {
    const auto v = vq::assign_tokens(assets.video, utt.video->patches).ids;
    ids.insert(ids.end(), v.begin(), v.end());
  }
  return ids;
}

Assets run_tokenize(const RunConfig& c, std::ostream& log) {
  const auto utts = load_corpus(c.train_manifest(), c.video, true);
  if (utts.empty()) throw std::runtime_error("tokenize: empty corpus");
  fs::create_directories(c.paths.codebook_dir);

  // Everything is written and read back before use, so ids computed here
  // match ids computed later from the saved (f32) files.
  write_tensor_file(whitener_path(c), features::whitener_to_tensor(features::fit_whitener(stack_audio(utts, nullptr))));
  const features::Whitener whitener = features::whitener_from_tensor(read_tensor_file(whitener_path(c)));

  std::vector<Tensor> video_rows;
  for (const auto& u : utts) video_rows.push_back(u.video->patches);
  const Tensor audio = vq::reservoir_sample(stack_audio(utts, &whitener), c.tokenize.sample_cap,
                                            derive_seed(c.seed, "tokenize/audio"));
  const Tensor video =
      vq::reservoir_sample(concat_rows(video_rows), c.tokenize.sample_cap, derive_seed(c.seed, "tokenize/video"));

  auto train = [&](const Tensor& x, std::size_t k, vq::Modality m, std::size_t offset, const fs::path& path) {
    vq::KMeansTrace trace;
    const auto cb = vq::train_kmeans(x, k, c.tokenize.max_iters,
                                     derive_seed(c.seed, "kmeans/" + std::string(vq::modality_name(m))), m, offset,
                                     &trace);
    vq::save_codebook(path, cb);
    log << "kmeans modality=" << vq::modality_name(m) << " k=" << k << " vectors=" << x.rows()
        << " iters=" << trace.iterations << " distortion=" << fixed(trace.distortion.back()) << '\n';
  };
  train(audio, c.tokenize.audio_k, vq::Modality::kAudio, 0, audio_codebook_path(c));
  train(video, c.tokenize.video_k, vq::Modality::kVideo, c.tokenize.audio_k, video_codebook_path(c));
  Assets assets = load_assets(c);

  std::ostringstream tokens;
  for (const auto& u : utts) {
    const auto a = vq::assign_tokens(assets.audio, features::whiten_clip(u.audio, assets.whitener).patches).ids;
    const auto v = vq::assign_tokens(assets.video, u.video->patches).ids;
    tokens << u.id << '\t';
    for (std::size_t i = 0; i < a.size(); ++i) tokens << (i ? " " : "") << a[i];
    tokens << '\t';
    for (std::size_t i = 0; i < v.size(); ++i) tokens << (i ? " " : "") << v[i];
    tokens << '\n';
  }
  write_file(c.paths.codebook_dir / "tokens.tsv", tokens.str());
  std::ostringstream vocab;
  vocab << "audio_k " << assets.audio.k() << "\nvideo_k " << assets.video.k() << "\nvocab_size " << assets.vocab_size()
        << '\n';
  write_file(c.paths.codebook_dir / "vocab.txt", vocab.str());
  log << "vocab_size=" << assets.vocab_size() << " utterances=" << utts.size() << '\n';
  return assets;
}

avbert::AvBertModel load_avbert(const fs::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.kind != "avbert") throw std::runtime_error(path.string() + " is not an AV-BERT checkpoint");
  avbert::AvBertModel model(parse_config(ck.config).avbert);
  restore_checkpoint(ck, model.parameters());
  return model;
}

PretrainResult run_pretraining(const RunConfig& c, std::ostream& log) {
  const Assets assets = assets_exist(c) ? load_assets(c) : run_tokenize(c, log);
  auto make_batches = [&](const fs::path& manifest) {
    std::vector<avbert::MultimodalBatch> out;
    for (const auto& u : load_corpus(manifest, c.video, true)) {
      avbert::MultimodalBatch b;
      b.audio = features::whiten_clip(u.audio, assets.whitener);
      b.video = u.video;
      b.labels = tokenize_utterance(assets, u);
      out.push_back(std::move(b));
    }
    if (out.empty()) throw std::runtime_error("pretrain: empty corpus " + manifest.string());
    return out;
  };
  const auto train = make_batches(c.train_manifest());
  std::vector<avbert::MultimodalBatch> validation;
  if (c.train.eval_every > 0) validation = make_batches(c.eval_manifest());

  RunConfig snapshot = c;
  snapshot.avbert = effective_avbert(c, assets);
  avbert::AvBertModel model(snapshot.avbert);
  const fs::path ckpt_path = c.paths.checkpoint_dir / "avbert.ckpt";
  std::uint64_t step = 0;
  if (c.train.resume && fs::exists(ckpt_path)) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    restore_checkpoint(ck, model.parameters());
    step = ck.step;
    log << "resume step=" << step << '\n';
  }
  auto save = [&] {
    save_checkpoint(ckpt_path, capture_checkpoint("avbert", step, format_config(snapshot), model.parameters()));
  };

  const auto order = data_order(train.size(), c.seed);
  PretrainResult result;
  double best = INFINITY;
  std::uint64_t since_best = 0;
  for (; step < c.train.max_steps;) {
    const auto batch = pick_batch(train, order, step, c.train.batch_size);
    const auto r = avbert::pretrain_step(model, batch, c.optim, step, c.seed);
    result.final_loss = r.loss;
    if (step % c.train.log_every == 0) {
      log << "step=" << step << " loss=" << fixed(r.loss) << " ppl=" << fixed(r.perplexity) << " mask_w=" << r.mask_width
          << " mask_p=" << fixed(r.mask_prob) << '\n';
    }
    ++step;
    if (step % c.train.checkpoint_every == 0) save();
    if (c.train.eval_every > 0 && step % c.train.eval_every == 0) {
      NoGradGuard no_grad;
      std::mt19937_64 rng(derive_seed(c.seed, "validation"));
      double total = 0.0;
      for (const auto& b : validation) {
        const MaskPlan mask = avbert::draw_mask(b, snapshot.avbert.mask, step, rng);
        total += model.mlm_loss(model.encode(model.embed(b, mask.mask)), b.labels, mask).item();
      }
      const double val = total / static_cast<double>(validation.size());
      log << "eval step=" << step << " val_loss=" << fixed(val) << " val_ppl=" << fixed(std::exp(val)) << '\n';
      if (val < best) {
        best = val;
        since_best = 0;
      } else if (c.train.patience > 0 && ++since_best >= c.train.patience) {
        log << "early stop step=" << step << '\n';
        result.stopped_early = true;
        break;
      }
    }
  }
  save();
  result.final_step = step;
  result.checkpoint = ckpt_path;
  return result;
}

EditCounts corpus_counts(std::span<const std::vector<std::string>> references,
                         std::span<const std::vector<std::string>> hypotheses) {
  if (references.size() != hypotheses.size()) throw std::invalid_argument("corpus_counts: size mismatch");
  EditCounts total;
  for (std::size_t i = 0; i < references.size(); ++i) total += align_words(references[i], hypotheses[i]);
  return total;
}

AsrTrainResult run_asr_training(const RunConfig& c, std::ostream& log) {
  const auto train_utts = load_corpus(c.train_manifest(), c.video, false);
  if (train_utts.empty()) throw std::runtime_error("train_asr: empty corpus");
  const features::Whitener whitener = load_or_fit_whitener(c, train_utts, log);

  RunConfig snapshot = c;
  snapshot.asr.vocab_size = corpus::kNumSymbols;
  snapshot.asr.seed = c.seed;
  AsrTrainResult result;
  std::optional<avbert::AvBertModel> encoder;
  if (c.asr.fusion_mode == asr::FusionMode::kCrossAttention) {
    if (!fs::exists(c.pretrain_checkpoint())) {
      throw std::runtime_error("cross_attention mode needs an AV-BERT checkpoint; not found: " +
                               c.pretrain_checkpoint().string());
    }
    encoder.emplace(load_avbert(c.pretrain_checkpoint()));
    snapshot.asr.env_dim = encoder->config().model_dim;
    result.avbert_hash_before = parameter_hash(encoder->parameters());
    log << "avbert_hash=" << hex64(*result.avbert_hash_before) << '\n';
  }
  const avbert::AvBertModel* env_model = encoder ? &*encoder : nullptr;
  const AsrData train = prepare_asr_data(c, train_utts, whitener, env_model);
  AsrData validation;
  if (c.train.eval_every > 0) validation = prepare_asr_data(c, load_corpus(c.eval_manifest(), c.video, false), whitener, env_model);

  asr::ConformerTransducer model(snapshot.asr);
  const fs::path ckpt_path = c.paths.checkpoint_dir / "asr.ckpt";
  std::uint64_t step = 0;
  if (c.train.resume && fs::exists(ckpt_path)) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    restore_checkpoint(ck, model.parameters());
    step = ck.step;
    log << "resume step=" << step << '\n';
  }
  auto save = [&] {
    save_checkpoint(ckpt_path, capture_checkpoint("asr", step, format_config(snapshot), model.parameters()));
  };

  const auto order = data_order(train.utterances.size(), c.seed);
  double best = INFINITY;
  std::uint64_t since_best = 0;
  for (; step < c.train.max_steps;) {
    const auto batch = pick_batch(train.utterances, order, step, c.train.batch_size);
    std::mt19937_64 rng(derive_seed(c.seed, "specaugment/" + std::to_string(step)));
    const double loss = asr::asr_train_step(model, batch, c.optim, c.train.specaugment ? &c.specaug : nullptr, rng);
    result.final_loss = loss;
    if (step % c.train.log_every == 0) log << "step=" << step << " loss=" << fixed(loss) << '\n';
    ++step;
    if (step % c.train.checkpoint_every == 0) save();
    if (c.train.eval_every > 0 && step % c.train.eval_every == 0) {
      const double rate = decode_all(model, validation).counts.rate();
      result.last_wer = rate;
      log << "eval step=" << step << " wer=" << fixed(rate) << '\n';
      if (rate <= c.train.target_wer) break;
      if (rate < best) {
        best = rate;
        since_best = 0;
      } else if (c.train.patience > 0 && ++since_best >= c.train.patience) {
        log << "early stop step=" << step << '\n';
        break;
      }
    }
  }
  save();
  if (encoder) {
    result.avbert_hash_after = parameter_hash(encoder->parameters());
    if (result.avbert_hash_after != result.avbert_hash_before) {
      throw std::logic_error("AV-BERT parameters changed during ASR training");
    }
  }
  result.final_step = step;
  result.checkpoint = ckpt_path;
  return result;
}

EvalResult run_eval(const RunConfig& c, const fs::path& asr_checkpoint, std::ostream& log) {
  const Checkpoint ck = load_checkpoint(asr_checkpoint);
  if (ck.kind != "asr") throw std::runtime_error(asr_checkpoint.string() + " is not an ASR checkpoint");
  const RunConfig trained = parse_config(ck.config);
  asr::ConformerTransducer model(trained.asr);
  restore_checkpoint(ck, model.parameters());

  const auto utts = load_corpus(c.eval_manifest(), c.video, false);
  if (utts.empty()) throw std::runtime_error("eval: empty eval set " + c.eval_manifest().string());
  const auto train_utts =
      fs::exists(whitener_path(c)) ? std::vector<CorpusUtterance>{} : load_corpus(c.train_manifest(), c.video, false);
  const features::Whitener whitener = load_or_fit_whitener(c, train_utts, log);
  std::optional<avbert::AvBertModel> encoder;
  if (trained.asr.fusion_mode == asr::FusionMode::kCrossAttention) encoder.emplace(load_avbert(c.pretrain_checkpoint()));

  EvalResult result = decode_all(model, prepare_asr_data(c, utts, whitener, encoder ? &*encoder : nullptr));
  fs::create_directories(c.output_dir());
  std::string hyps;
  for (const auto& h : result.hypotheses) hyps += h + '\n';
  write_file(c.output_dir() / "hypotheses.txt", hyps);
  const std::string report = format_wer_report(result.counts);
  write_file(c.output_dir() / "wer.txt", report + '\n');
  log << report << '\n';
  return result;
}

}  // namespace envasr::pipeline
