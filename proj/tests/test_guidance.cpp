#include "layercut/guidance.hpp"
#include "layercut/guidance_remote.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

using namespace layercut;

namespace {

Image random_image(int h, int w, int c, std::uint64_t seed) {
    Rng rng(seed);
    Image img(h, w, c);
    for (auto& v : img.data) v = rng.uniform(0.0, 1.0);
    return img;
}

}  // namespace

TEST_CASE("noise schedule: monotone alpha-bar and positive weights") {
    const NoiseSchedule s = NoiseSchedule::linear();
    REQUIRE(s.T == 1000);
    CHECK(s.alpha_bar_at(1) == Catch::Approx(0.9999));
    CHECK(s.alpha_bar_at(1) < 1.0);
    for (int t = 2; t <= s.T; ++t) CHECK(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1));
    for (int t = 1; t <= s.T; ++t) {
        CHECK(s.weight(t) > 0.0);
        CHECK(s.alpha_bar_at(t) > 0.0);
    }
    CHECK_THROWS_AS(s.alpha_bar_at(0), std::invalid_argument);
    CHECK_THROWS_AS(s.alpha_bar_at(1001), std::invalid_argument);
}

TEST_CASE("forward diffuse: near-identity at t=1, reproducible, unbiased") {
    const NoiseSchedule s = NoiseSchedule::linear();
    const Image x = random_image(4, 4, 3, 5);

    SECTION("t=1 keeps the image nearly unchanged") {
        auto [xt, eps] = forward_diffuse(x, 1, s, 1);
        for (size_t i = 0; i < x.data.size(); ++i)
            CHECK(xt.data[i] == Catch::Approx(x.data[i]).margin(0.15));
    }
    SECTION("fixed seed reproduces (x_t, eps)") {
        auto [xt1, eps1] = forward_diffuse(x, 500, s, 99);
        auto [xt2, eps2] = forward_diffuse(x, 500, s, 99);
        CHECK(xt1.data == xt2.data);
        CHECK(eps1.data == eps2.data);
        auto [xt3, eps3] = forward_diffuse(x, 500, s, 100);
        CHECK(xt1.data != xt3.data);
    }
    SECTION("Monte Carlo mean and variance") {
        const int t = 400, n = 10000;
        const double sa = std::sqrt(s.alpha_bar_at(t));
        const double sb = std::sqrt(1.0 - s.alpha_bar_at(t));
        Image x1 = random_image(2, 2, 1, 6);
        std::vector<double> mean(x1.data.size(), 0.0), var(x1.data.size(), 0.0);
        for (int i = 0; i < n; ++i) {
            auto [xt, eps] = forward_diffuse(x1, t, s, 1000 + i);
            for (size_t k = 0; k < xt.data.size(); ++k) {
                mean[k] += xt.data[k];
                var[k] += xt.data[k] * xt.data[k];
            }
        }
        for (size_t k = 0; k < mean.size(); ++k) {
            mean[k] /= n;
            var[k] = var[k] / n - mean[k] * mean[k];
            const double sigma = sb / std::sqrt(static_cast<double>(n));
            CHECK(std::abs(mean[k] - sa * x1.data[k]) <= 3.0 * sigma);
            // Var(x_t) = 1 - alpha_bar for a deterministic clean image.
            CHECK(var[k] == Catch::Approx(sb * sb).epsilon(0.1));
        }
    }
    SECTION("t out of range") {
        CHECK_THROWS_AS(forward_diffuse(x, 0, s, 1), std::invalid_argument);
        CHECK_THROWS_AS(forward_diffuse(x, 1001, s, 1), std::invalid_argument);
    }
}

TEST_CASE("mock guidance: exact prediction and analytic gradient") {
    const NoiseSchedule s = NoiseSchedule::linear();
    const Image target = random_image(6, 6, 4, 7);
    const auto model = mock_guidance(target, s);
    const Condition cond;

    SECTION("x = target makes eps_hat = eps exactly") {
        for (int t : {1, 250, 999}) {
            auto [xt, eps] = forward_diffuse(target, t, s, 2024);
            const Image pred = model->predict_noise(xt, cond, t);
            for (size_t i = 0; i < eps.data.size(); ++i)
                CHECK(pred.data[i] == Catch::Approx(eps.data[i]).margin(1e-9));
        }
    }
    SECTION("gradient equals w(t) alpha_bar / sqrt(1-alpha_bar) (x - target)") {
        const Image x = random_image(6, 6, 4, 8);
        const int t = 300;
        const Image g = sds_pixel_gradient(x, cond, *model, s, t, 11);
        const double ab = s.alpha_bar_at(t);
        const double k = s.weight(t) * ab / std::sqrt(1.0 - ab);
        for (size_t i = 0; i < g.data.size(); ++i)
            CHECK(g.data[i] == Catch::Approx(k * (x.data[i] - target.data[i])).margin(1e-9));
    }
    SECTION("gradient sign matches x - target componentwise") {
        const Image x = random_image(6, 6, 4, 9);
        const Image g = sds_pixel_gradient(x, cond, *model, s, 500, 3);
        for (size_t i = 0; i < g.data.size(); ++i)
            if (std::abs(x.data[i] - target.data[i]) > 1e-12)
                CHECK(g.data[i] * (x.data[i] - target.data[i]) > 0.0);
    }
    SECTION("gradient is independent of the noise seed") {
        const Image x = random_image(6, 6, 4, 10);
        const Image g1 = sds_pixel_gradient(x, cond, *model, s, 700, 1);
        const Image g2 = sds_pixel_gradient(x, cond, *model, s, 700, 999);
        for (size_t i = 0; i < g1.data.size(); ++i)
            CHECK(g1.data[i] == Catch::Approx(g2.data[i]).margin(1e-10));
    }
    SECTION("gradient scales with the schedule factor across t") {
        const Image x = random_image(6, 6, 4, 12);
        const int t1 = 600, t2 = 900;
        const Image g1 = sds_pixel_gradient(x, cond, *model, s, t1, 4);
        const Image g2 = sds_pixel_gradient(x, cond, *model, s, t2, 4);
        const double k1 = s.weight(t1) * s.alpha_bar_at(t1) / std::sqrt(1 - s.alpha_bar_at(t1));
        const double k2 = s.weight(t2) * s.alpha_bar_at(t2) / std::sqrt(1 - s.alpha_bar_at(t2));
        for (size_t i = 0; i < g1.data.size(); ++i) {
            if (std::abs(g1.data[i]) < 1e-12) continue;
            CHECK(g2.data[i] / g1.data[i] == Catch::Approx(k2 / k1).epsilon(1e-6));
        }
    }
    SECTION("iterated descent converges geometrically") {
        Image x = random_image(6, 6, 4, 13);
        Image target_copy = target;
        const int t = 400;
        const double ab = s.alpha_bar_at(t);
        const double k = s.weight(t) * ab / std::sqrt(1.0 - ab);
        const double lr = 0.5 / k;  // contraction factor 0.5 per step
        double prev = 1e30;
        for (int it = 0; it < 20; ++it) {
            const Image g = sds_pixel_gradient(x, cond, *model, s, t, 100 + it);
            double err = 0.0;
            for (size_t i = 0; i < x.data.size(); ++i) {
                x.data[i] -= lr * g.data[i];
                const double d = x.data[i] - target_copy.data[i];
                err += d * d;
            }
            CHECK(err < prev * 0.51);
            prev = err;
        }
        CHECK(prev < 1e-10);
    }
    SECTION("shape mismatch is rejected") {
        const Image bad = random_image(3, 3, 1, 1);
        CHECK_THROWS_AS(sds_pixel_gradient(bad, cond, *model, s, 100, 1), std::invalid_argument);
    }
}

TEST_CASE("prompt construction follows the templates") {
    const Condition a = build_prompts(PromptSpace::Human, "woman", "hat", ViewTag::Front);
    CHECK(a.text_positive == "A photo of a woman, front view");
    CHECK(a.text_negative == "hat");

    const Condition b = build_prompts(PromptSpace::Composite, "man", "jacket", ViewTag::Back);
    CHECK(b.text_positive == "A photo of a man wearing jacket, back view");
    CHECK(b.text_negative.empty());

    const Condition c = build_prompts(PromptSpace::Human, "man", "scarf", ViewTag::Side);
    CHECK(c.text_positive.find("side view") != std::string::npos);
}

namespace {

/// Minimal in-process guidance service for the adapter tests.
class TestServer {
public:
    explicit TestServer(httplib::Server::Handler handler) {
        server_.Post("/predict_noise", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~TestServer() {
        server_.stop();
        thread_.join();
    }
    int port() const { return port_; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_CASE("remote guidance: echo round trip preserves values within f32") {
    TestServer server([](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json reply;
        reply["epsilon_b64"] = body["image_b64"];  // echo x_t back as epsilon
        res.set_content(reply.dump(), "application/json");
    });
    const auto model = remote_guidance("http://127.0.0.1:" + std::to_string(server.port()), 2000);
    const NoiseSchedule s = NoiseSchedule::linear();
    const Image x = random_image(5, 7, 4, 21);
    auto [xt, eps] = forward_diffuse(x, 123, s, 77);
    const Image pred = model->predict_noise(xt, Condition{}, 123);
    REQUIRE(pred.height == 5);
    REQUIRE(pred.width == 7);
    REQUIRE(pred.channels == 4);
    for (size_t i = 0; i < xt.data.size(); ++i)
        CHECK(pred.data[i] == Catch::Approx(xt.data[i]).margin(1e-6));
}

TEST_CASE("remote guidance: request carries the condition fields") {
    nlohmann::json seen;
    TestServer server([&seen](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        nlohmann::json reply;
        reply["epsilon_b64"] = seen["image_b64"];
        res.set_content(reply.dump(), "application/json");
    });
    const auto model = remote_guidance("http://127.0.0.1:" + std::to_string(server.port()), 2000);
    Condition cond = build_prompts(PromptSpace::Human, "woman", "hat", ViewTag::Side);
    cond.pose_keypoints[0] = {12.5, 40.0, true};
    const Image x = random_image(4, 4, 4, 3);
    (void)model->predict_noise(x, cond, 42);
    CHECK(seen["t"] == 42);
    CHECK(seen["text_positive"] == "A photo of a woman, side view");
    CHECK(seen["text_negative"] == "hat");
    CHECK(seen["view_tag"] == "side view");
    CHECK(seen["height"] == 4);
    CHECK(seen["channels"] == 4);
    CHECK(seen["pose_keypoints"][0]["x"] == 12.5);
    CHECK(seen["pose_keypoints"][0]["visible"] == true);
}

TEST_CASE("remote guidance: unreachable endpoint raises a timeout error") {
    const auto model = remote_guidance("http://127.0.0.1:9", 200);  // discard port
    const Image x = random_image(2, 2, 1, 1);
    CHECK_THROWS_AS(model->predict_noise(x, Condition{}, 10), GuidanceTimeoutError);
}

TEST_CASE("remote guidance: malformed and error responses are distinct") {
    SECTION("wrong shape payload") {
        TestServer server([](const httplib::Request&, httplib::Response& res) {
            nlohmann::json reply;
            reply["epsilon_b64"] = detail_b64::encode({1, 2, 3, 4});  // wrong size
            res.set_content(reply.dump(), "application/json");
        });
        const auto model =
            remote_guidance("http://127.0.0.1:" + std::to_string(server.port()), 2000);
        const Image x = random_image(2, 2, 1, 1);
        CHECK_THROWS_AS(model->predict_noise(x, Condition{}, 10), GuidanceMalformedError);
    }
    SECTION("non-JSON body") {
        TestServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content("definitely not json", "text/plain");
        });
        const auto model =
            remote_guidance("http://127.0.0.1:" + std::to_string(server.port()), 2000);
        const Image x = random_image(2, 2, 1, 1);
        CHECK_THROWS_AS(model->predict_noise(x, Condition{}, 10), GuidanceMalformedError);
    }
    SECTION("HTTP 500") {
        TestServer server([](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
            res.set_content("boom", "text/plain");
        });
        const auto model =
            remote_guidance("http://127.0.0.1:" + std::to_string(server.port()), 2000);
        const Image x = random_image(2, 2, 1, 1);
        CHECK_THROWS_AS(model->predict_noise(x, Condition{}, 10), GuidanceHttpError);
    }
}
