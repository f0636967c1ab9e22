"""Prompt templating, completion clients with caching, and response parsing."""

from .client import (
    API_KEY_ENV,
    CachingClient,
    CompletionClient,
    HttpChatClient,
    LlmExchange,
    MockClient,
    RateLimiter,
    cache_key,
    complete_many,
    prompt_hash,
)
from .operators import OPERATORS, OperatorKind, PromptOperator, render_prompt
from .parsing import GenerationBundle, parse_generation, parse_paraphrases

__all__ = [
    "API_KEY_ENV",
    "CachingClient",
    "CompletionClient",
    "GenerationBundle",
    "HttpChatClient",
    "LlmExchange",
    "MockClient",
    "OPERATORS",
    "OperatorKind",
    "PromptOperator",
    "RateLimiter",
    "cache_key",
    "complete_many",
    "parse_generation",
    "parse_paraphrases",
    "prompt_hash",
    "render_prompt",
]
