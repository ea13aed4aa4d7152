#include <doctest.h>

#include <atomic>
#include <nlohmann/json.hpp>
#include <thread>

#include "p2m/core/error.hpp"
#include "p2m/text/backends.hpp"
#include "p2m/text/text.hpp"
#include "support.hpp"

// After the Eigen-based headers: <resolv.h> defines a _res macro.
#include <httplib.h>

using namespace p2m;
using namespace p2m::text;

namespace {

const std::string kSailor = "sad man in a sailor's hat sitting at a table";
const std::string kMelancholic = "A melancholic piano ballad in a minor key, slow tempo, with a descending melody.";

class ScriptedLlm final : public LlmBackend {
 public:
  explicit ScriptedLlm(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  [[nodiscard]] std::string id() const override { return "scripted"; }
  [[nodiscard]] std::string complete(const PromptText&) const override {
    const auto i = calls_++;
    if (i >= replies_.size() || replies_[i].empty()) throw BackendError("scripted failure");
    return replies_[i];
  }
  mutable std::size_t calls_ = 0;

 private:
  std::vector<std::string> replies_;
};

}  // namespace

TEST_CASE("prompt for the sailor caption") {
  const auto prompt = build_prompt(make_caption(kSailor, Emotion::Sad, CaptionSource::Captioner));
  CHECK(prompt.system_message == kSystemMessage);
  CHECK(prompt.instruction ==
        "Generate a musical theme description for the following image description: \"" + kSailor +
            "\". Include details like mood, genre, tempo, and melody in 2 lines.");
  CHECK(prompt.render() == "### System:\n" + std::string(kSystemMessage) + "\n\n### Instruction:\n" +
                               prompt.instruction + "\n\n### Response:\n");
  CHECK(caption_from_instruction(prompt.instruction) == kSailor);
}

TEST_CASE("captions are normalised and bounded") {
  const auto c = make_caption("  a   sad\n painting ", Emotion::Sad, CaptionSource::Captioner);
  CHECK(c.text == "a sad painting");
  CHECK_THROWS_AS(make_caption(" \t ", Emotion::Sad, CaptionSource::Captioner), ValidationError);
  const auto long_text = make_caption(std::string(600, 'x'), Emotion::Fun, CaptionSource::Captioner);
  CHECK(long_text.text.size() == kMaxTextChars);
  // Multi-byte characters are never split.
  std::string accents;
  for (int i = 0; i < 300; ++i) accents += "\xc3\xa9";
  CHECK(make_caption(accents, Emotion::Fun, CaptionSource::Captioner).text.size() == 512);
  std::string odd = "a" + accents;
  CHECK(make_caption(odd, Emotion::Fun, CaptionSource::Captioner).text.size() == 511);
}

TEST_CASE("parse keeps the first two sentences") {
  const auto d = parse_llm_response("A slow waltz in D minor.  Strings carry the melody!\nThen drums. More.");
  CHECK(d.text == "A slow waltz in D minor. Strings carry the melody!");
  CHECK(d.mood_terms_present);
  CHECK(parse_llm_response("no terminator here").text == "no terminator here");
  CHECK(parse_llm_response("Version 2.5 is out. Fine").text == "Version 2.5 is out. Fine");
  CHECK_THROWS_AS(parse_llm_response("   \n "), ValidationError);
  CHECK_FALSE(parse_llm_response("A cat sat.").mood_terms_present);
}

TEST_CASE("parse strips an echoed prompt") {
  const auto prompt = build_prompt(make_caption(kSailor, Emotion::Sad, CaptionSource::Captioner));
  CHECK(parse_llm_response(prompt.render() + kMelancholic, &prompt).text == kMelancholic);
  CHECK(parse_llm_response(prompt.instruction + "\n" + kMelancholic, &prompt).text == kMelancholic);
  CHECK(parse_llm_response("### Response:\n" + kMelancholic, &prompt).text == kMelancholic);
  CHECK(parse_llm_response("Response: " + kMelancholic).text == kMelancholic);
  CHECK_THROWS_AS(parse_llm_response(prompt.render(), &prompt), ValidationError);
  // A short accidental overlap is not an echo.
  CHECK(parse_llm_response("Generate joy. Then rest.", &prompt).text == "Generate joy. Then rest.");
}

TEST_CASE("parse truncates to 512 characters") {
  const auto d = parse_llm_response(std::string(700, 'a') + ".");
  CHECK(d.text.size() == 512);
}

TEST_CASE("mood lexicon") {
  CHECK(has_mood_terms("an upbeat tempo"));
  CHECK(has_mood_terms("Piano"));
  CHECK_FALSE(has_mood_terms("a chair by the window"));
}

TEST_CASE("variants and text selection") {
  CHECK(parse_variant("Optimized") == Variant::Optimized);
  CHECK_THROWS_AS(parse_variant("fancy"), ValidationError);
  SampleTexts s{Emotion::Sad, kSailor, kMelancholic};
  CHECK(text_for_variant(Variant::Emotive, s) == "sad song");
  CHECK(text_for_variant(Variant::Narrative, s) == kSailor);
  CHECK(text_for_variant(Variant::Lyrical, s) == kMelancholic);
  CHECK(text_for_variant(Variant::Optimized, s) == kMelancholic);
  CHECK(emotive_text(Emotion::Angry) == "angry song");
  SampleTexts bare{Emotion::Fun, std::nullopt, std::nullopt};
  CHECK_THROWS_AS(text_for_variant(Variant::Narrative, bare), ValidationError);
  CHECK_THROWS_AS(text_for_variant(Variant::Lyrical, bare), ValidationError);
}

TEST_CASE("toy backends compose to the fixture sentence") {
  const auto img = p2m::testing::separable_images(1, 1)[2].image;
  const auto caption = caption_image(ToyCaptioner(), img, Emotion::Sad, "x");
  CHECK(caption.text.find("sad") != std::string::npos);
  CHECK(caption_image(ToyCaptioner(), img, Emotion::Sad).text == caption.text);
  const auto prompt = build_prompt(caption);
  CHECK(parse_llm_response(ToyLlm().complete(prompt), &prompt).text == kMelancholic);
  const auto sailor = build_prompt(make_caption(kSailor, Emotion::Sad, CaptionSource::Captioner));
  CHECK(ToyLlm().complete(sailor) == kMelancholic);
  CHECK(conditioning_prefix(Emotion::Happy) == "a happy painting of");
}

TEST_CASE("captioner output without the emotion gets the prefix") {
  class Plain final : public CaptionBackend {
   public:
    [[nodiscard]] std::string id() const override { return "plain"; }
    [[nodiscard]] std::string caption(const CaptionRequest&) const override { return "a man at a table"; }
  };
  const auto img = p2m::testing::separable_images(1, 1)[0].image;
  CHECK(caption_image(Plain(), img, Emotion::Angry).text == "a angry painting of a man at a table");
}

TEST_CASE("enhance retries transient failures") {
  const auto prompt = build_prompt(make_caption(kSailor, Emotion::Sad, CaptionSource::Captioner));
  ScriptedLlm flaky({"", "Soft piano."});
  CHECK(enhance_description(flaky, prompt, 2) == "Soft piano.");
  CHECK(flaky.calls_ == 2);
  ScriptedLlm dead({"", "", ""});
  CHECK_THROWS_AS(enhance_description(dead, prompt, 2), BackendError);
  CHECK(dead.calls_ == 3);
}

TEST_CASE("command backends") {
  CommandLlm llm("sh -c 'cat >/dev/null; echo \"A slow waltz. In D minor. Extra.\"'", std::chrono::seconds(5));
  const auto prompt = build_prompt(make_caption(kSailor, Emotion::Sad, CaptionSource::Captioner));
  CHECK(parse_llm_response(llm.complete(prompt), &prompt).text == "A slow waltz. In D minor.");
  CommandLlm failing("sh -c 'exit 4'", std::chrono::seconds(5));
  CHECK_THROWS_AS(failing.complete(prompt), BackendError);
  CommandCaptioner cap("sh -c 'echo a quiet harbour'", std::chrono::seconds(5));
  const auto img = p2m::testing::separable_images(1, 1)[0].image;
  CHECK(caption_image(cap, img, Emotion::Sad).text == "a sad painting of a quiet harbour");
}

TEST_CASE("http LLM backend") {
  httplib::Server server;
  std::atomic<bool> saw_prompt{false};
  server.Post("/complete", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    saw_prompt = body.at("prompt").get<std::string>().find("### Instruction:") != std::string::npos;
    res.set_content(R"({"text": "Bright brass fanfare. Fast tempo."})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  HttpLlm llm("http://127.0.0.1:" + std::to_string(port) + "/complete", std::chrono::seconds(5));
  const auto prompt = build_prompt(make_caption("a fair", Emotion::Happy, CaptionSource::Captioner));
  CHECK(llm.complete(prompt) == "Bright brass fanfare. Fast tempo.");
  CHECK(saw_prompt);
  HttpLlm missing("http://127.0.0.1:" + std::to_string(port) + "/nope", std::chrono::seconds(5));
  CHECK_THROWS_AS(missing.complete(prompt), BackendError);
  server.stop();
  worker.join();
}
