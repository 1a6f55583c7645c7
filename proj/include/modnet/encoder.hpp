#pragma once

#include <set>
#include <string>
#include <vector>

#include "modnet/params.hpp"
#include "modnet/tape.hpp"

namespace modnet {

struct EncoderConfig {
  int d_emb = 32;
  int d_h = 64;
};

// Final hidden state of a left-to-right LSTM over the question tokens.
// Standard gates, no peepholes; the forget bias starts at 1. Per-word
// embeddings are parameters "encoder/emb/<word>"; words outside known_words
// read the shared "encoder/emb/<unk>" row. Gate weights are
// "encoder/W<gate>" (input) and "encoder/U<gate>" (recurrent) with biases
// "encoder/b<gate>" for gate in {i, f, o, c}.
int encode_question(const std::vector<std::string>& tokens,
                    const std::set<std::string>& known_words,
                    const EncoderConfig& cfg, ParamStore& params, Tape& tape);

}  // namespace modnet
