#include "masrisk/core/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <stdexcept>

namespace masrisk {

std::string sha256_hex(const std::string& bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx) {
        throw std::runtime_error("sha256: cannot allocate digest context");
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
    unsigned int len = 0;
    if (EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1) {
        throw std::runtime_error("sha256: digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string text;
    text.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        text.push_back(hex[out[i] >> 4]);
        text.push_back(hex[out[i] & 0x0f]);
    }
    return text;
}

// nlohmann::json keeps object keys in a std::map, so dump() is already key-sorted.
std::string canonical_dump(const json& value) { return value.dump(); }

std::string config_digest(const json& config) { return sha256_hex(canonical_dump(config)); }

}  // namespace masrisk
