#include "modnet/encoder.hpp"

#include "modnet/errors.hpp"

namespace modnet {

int encode_question(const std::vector<std::string>& tokens,
                    const std::set<std::string>& known_words,
                    const EncoderConfig& cfg, ParamStore& params, Tape& tape) {
  if (tokens.empty()) throw ConfigError("encode_question: empty question");
  const int de = cfg.d_emb, dh = cfg.d_h;

  int Wi = tape.param(params, "encoder/Wi", {dh, de});
  int Wf = tape.param(params, "encoder/Wf", {dh, de});
  int Wo = tape.param(params, "encoder/Wo", {dh, de});
  int Wc = tape.param(params, "encoder/Wc", {dh, de});
  int Ui = tape.param(params, "encoder/Ui", {dh, dh});
  int Uf = tape.param(params, "encoder/Uf", {dh, dh});
  int Uo = tape.param(params, "encoder/Uo", {dh, dh});
  int Uc = tape.param(params, "encoder/Uc", {dh, dh});
  int bi = tape.param(params, "encoder/bi", {dh}, Init::Zero);
  int bf = tape.param(params, "encoder/bf", {dh}, Init::One);
  int bo = tape.param(params, "encoder/bo", {dh}, Init::Zero);
  int bc = tape.param(params, "encoder/bc", {dh}, Init::Zero);

  int h = tape.constant(Tensor::vec(dh));
  int c = tape.constant(Tensor::vec(dh));
  for (const std::string& tok : tokens) {
    const std::string word = known_words.count(tok) ? tok : "<unk>";
    int x = tape.param(params, "encoder/emb/" + word, {de});
    auto gate = [&](int W, int U, int b) {
      return tape.add(tape.add(tape.matvec(W, x), tape.matvec(U, h)), b);
    };
    int i = tape.sigmoid(gate(Wi, Ui, bi));
    int f = tape.sigmoid(gate(Wf, Uf, bf));
    int o = tape.sigmoid(gate(Wo, Uo, bo));
    int cand = tape.tanh_(gate(Wc, Uc, bc));
    c = tape.add(tape.mul(f, c), tape.mul(i, cand));
    h = tape.mul(o, tape.tanh_(c));
  }
  return h;
}

}  // namespace modnet
