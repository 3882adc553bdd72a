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

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "envasr/config.hpp"
#include "envasr/corpus.hpp"
#include "envasr/pipeline.hpp"

namespace {

using envasr::RunConfig;
using envasr::Stage;

RunConfig load_for(const std::string& path, Stage stage) {
  RunConfig config = envasr::load_config(path);
  config.stage = stage;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"envasr: audio-visual pretraining and environment-aware transducer ASR"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_dir;
  std::size_t n_utterances = 16;
  std::uint64_t seed = 0;

  auto* pretrain = app.add_subcommand("pretrain", "Masked audio-visual pretraining");
  pretrain->add_option("--config", config_path, "Run config")->required();
  auto* tokenize = app.add_subcommand("tokenize", "Fit the whitener and k-means codebooks");
  tokenize->add_option("--config", config_path, "Run config")->required();
  auto* train_asr = app.add_subcommand("train-asr", "Transducer ASR training");
  train_asr->add_option("--config", config_path, "Run config")->required();
  auto* eval = app.add_subcommand("eval", "Greedy decoding and corpus WER");
  eval->add_option("--config", config_path, "Run config")->required();
  eval->add_option("--checkpoint", checkpoint_path, "ASR checkpoint")->required();
  auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic tone corpus");
  gen->add_option("--n", n_utterances, "Number of utterances")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Corpus seed")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*pretrain) {
      envasr::pipeline::run_pretraining(load_for(config_path, Stage::kPretrain), std::cout);
    } else if (*tokenize) {
      envasr::pipeline::run_tokenize(load_for(config_path, Stage::kTokenize), std::cout);
    } else if (*train_asr) {
      envasr::pipeline::run_asr_training(load_for(config_path, Stage::kTrainAsr), std::cout);
    } else if (*eval) {
      envasr::pipeline::run_eval(load_for(config_path, Stage::kEval), checkpoint_path, std::cout);
    } else if (*gen) {
      envasr::corpus::write_corpus(envasr::corpus::generate_synthetic_corpus(n_utterances, seed), out_dir);
      std::cout << "wrote " << n_utterances << " utterances to " << out_dir << '\n';
    }
  } catch (const std::exception& e) {
    std::cout.flush();
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
