#pragma once

#include "layercut/guidance.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstring>
#include <memory>
#include <string>
#include <vector>

namespace layercut {

namespace detail_b64 {

inline const char* kTable = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string encode(const std::vector<std::uint8_t>& in) {
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= in.size(); i += 3) {
        const std::uint32_t v = (in[i] << 16) | (in[i + 1] << 8) | in[i + 2];
        out += kTable[(v >> 18) & 63];
        out += kTable[(v >> 12) & 63];
        out += kTable[(v >> 6) & 63];
        out += kTable[v & 63];
    }
    if (i + 1 == in.size()) {
        const std::uint32_t v = in[i] << 16;
        out += kTable[(v >> 18) & 63];
        out += kTable[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == in.size()) {
        const std::uint32_t v = (in[i] << 16) | (in[i + 1] << 8);
        out += kTable[(v >> 18) & 63];
        out += kTable[(v >> 12) & 63];
        out += kTable[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

inline std::vector<std::uint8_t> decode(const std::string& in) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<std::uint8_t> out;
    out.reserve(in.size() / 4 * 3);
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : in) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = value(c);
        if (v < 0) throw GuidanceMalformedError("invalid base64 payload");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
        }
    }
    return out;
}

}  // namespace detail_b64

/// Little-endian f32 image payload used on the wire.
inline std::string encode_image_f32(const Image& img) {
    std::vector<std::uint8_t> bytes(img.data.size() * 4);
    for (size_t i = 0; i < img.data.size(); ++i) {
        const float f = static_cast<float>(img.data[i]);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        bytes[4 * i] = u & 0xff;
        bytes[4 * i + 1] = (u >> 8) & 0xff;
        bytes[4 * i + 2] = (u >> 16) & 0xff;
        bytes[4 * i + 3] = (u >> 24) & 0xff;
    }
    return detail_b64::encode(bytes);
}

inline Image decode_image_f32(const std::string& b64, int h, int w, int c) {
    const auto bytes = detail_b64::decode(b64);
    if (bytes.size() != static_cast<size_t>(h) * w * c * 4)
        throw GuidanceMalformedError("image payload has wrong size");
    Image img(h, w, c);
    for (size_t i = 0; i < img.data.size(); ++i) {
        const std::uint32_t u = bytes[4 * i] | (bytes[4 * i + 1] << 8) |
                                (bytes[4 * i + 2] << 16) |
                                (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
        float f;
        std::memcpy(&f, &u, 4);
        img.data[i] = f;
    }
    return img;
}

inline nlohmann::json condition_to_json(const Condition& cond) {
    nlohmann::json kp = nlohmann::json::array();
    for (const auto& k : cond.pose_keypoints)
        kp.push_back({{"x", k.x}, {"y", k.y}, {"visible", k.visible}});
    return {{"text_positive", cond.text_positive},
            {"text_negative", cond.text_negative},
            {"view_tag", view_tag_text(cond.view_tag)},
            {"pose_keypoints", kp}};
}

/// Adapter forwarding predict_noise to an HTTP service:
/// POST {endpoint}/predict_noise with a JSON body carrying the condition and
/// the base64 f32 image; the response mirrors the image encoding. Transient
/// transport failures are retried twice; timeouts, HTTP errors and malformed
/// responses surface as distinct exceptions.
class RemoteGuidance : public GuidanceModel {
public:
    RemoteGuidance(std::string endpoint_url, int timeout_ms)
        : url_(std::move(endpoint_url)), timeout_ms_(timeout_ms) {}

    Image predict_noise(const Image& x_t, const Condition& cond, int t) const override {
        nlohmann::json body = condition_to_json(cond);
        body["t"] = t;
        body["height"] = x_t.height;
        body["width"] = x_t.width;
        body["channels"] = x_t.channels;
        body["image_b64"] = encode_image_f32(x_t);
        const std::string payload = body.dump();

        httplib::Client client(url_);
        client.set_connection_timeout(0, timeout_ms_ * 1000);
        client.set_read_timeout(0, timeout_ms_ * 1000);
        client.set_write_timeout(0, timeout_ms_ * 1000);

        httplib::Result res;
        for (int attempt = 0; attempt < 3; ++attempt) {
            res = client.Post("/predict_noise", payload, "application/json");
            if (res) break;  // transport-level failures are retried
        }
        if (!res) {
            const auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                err == httplib::Error::Write || err == httplib::Error::Connection)
                throw GuidanceTimeoutError("guidance endpoint unreachable or timed out: " + url_);
            throw GuidanceHttpError("guidance transport error: " + httplib::to_string(err));
        }
        if (res->status != 200)
            throw GuidanceHttpError("guidance HTTP status " + std::to_string(res->status));

        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            throw GuidanceMalformedError("guidance response is not valid JSON");
        }
        if (!reply.contains("epsilon_b64") || !reply["epsilon_b64"].is_string())
            throw GuidanceMalformedError("guidance response missing epsilon_b64");
        return decode_image_f32(reply["epsilon_b64"].get<std::string>(), x_t.height, x_t.width,
                                x_t.channels);
    }

private:
    std::string url_;
    int timeout_ms_;
};

inline std::shared_ptr<GuidanceModel> remote_guidance(const std::string& endpoint_url,
                                                      int timeout_ms) {
    return std::make_shared<RemoteGuidance>(endpoint_url, timeout_ms);
}

}  // namespace layercut
