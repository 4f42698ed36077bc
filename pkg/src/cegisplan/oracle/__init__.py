"""Solution oracles: query/response types, prompts, the HTTP client and mocks."""

from .base import Message, Oracle, OracleQuery, OracleResponse, OracleTransportError, response_from_text
from .http import (
    AuthError,
    EndpointConfig,
    HttpOracle,
    MalformedApiResponse,
    RateLimited,
    TransportError,
    http_oracle_query,
    load_endpoint_config,
)
from .mock import NoisyOracle, PerfectOracle, ScriptedOracle, TranscriptExhausted, rejected_plans
from .prompts import (
    GOAL_GAP_SENTENCE,
    NO_PLAN_SENTENCE,
    RICH_PREFIX_SENTENCE,
    WEAK_INVALID_SENTENCE,
    ContextOverflowRisk,
    FeedbackMode,
    FewShotExample,
    InvalidFewShotExample,
    PromptConfig,
    build_feedback_prompt,
    build_initial_prompt,
    build_no_plan_prompt,
    estimate_tokens,
    default_examples,
    prompt_asset,
    prompt_asset_names,
)
