from rest_framework import serializers

from core.exceptions import PreconditionError
from simulate.config import SHARE_TOLERANCE, SIM_EPOCH
from simulate.models import ArrivalKind, ArrivalModel, MinerPolicy, Selection, SimConfig


class ArrivalModelSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=[kind.value for kind in ArrivalKind])
    rate = serializers.FloatField(required=False, allow_null=True, default=None)
    rate_low = serializers.FloatField(required=False, allow_null=True, default=None)
    rate_high = serializers.FloatField(required=False, allow_null=True, default=None)
    switch_up = serializers.FloatField(required=False, allow_null=True, default=None)
    switch_down = serializers.FloatField(required=False, allow_null=True, default=None)

    def validate(self, data):
        try:
            ArrivalModel(**data)
        except PreconditionError as exc:
            raise serializers.ValidationError(str(exc))
        return data


class MinerPolicySerializer(serializers.Serializer):
    name = serializers.CharField()
    hash_share = serializers.FloatField(min_value=0, max_value=1)
    size_cap = serializers.IntegerField(min_value=0)
    min_fee_rate = serializers.FloatField(min_value=0, default=0.0)
    selection = serializers.ChoiceField(
        choices=[selection.value for selection in Selection],
        default=Selection.FEE_RATE_GREEDY.value,
    )


class SimConfigSerializer(serializers.Serializer):
    """
    Simulation parameters as stored in the truth sidecar.
    """
    seed = serializers.IntegerField()
    horizon = serializers.FloatField()
    block_interval_mean = serializers.FloatField()
    tx_arrival = ArrivalModelSerializer()
    fee_dist = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2)
    tx_size_dist = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2)
    pools = MinerPolicySerializer(many=True)
    interval_modulation = serializers.FloatField(default=0.0)
    start_ts = serializers.IntegerField(default=SIM_EPOCH)

    def validate_horizon(self, value):
        if not value > 0:
            raise serializers.ValidationError("Horizon must be positive.")
        return value

    def validate_block_interval_mean(self, value):
        if not value > 0:
            raise serializers.ValidationError("Block interval mean must be positive.")
        return value

    def validate_interval_modulation(self, value):
        if not 0 <= value < 1:
            raise serializers.ValidationError("Interval modulation must lie in [0, 1).")
        return value

    def validate_pools(self, value):
        if not value:
            raise serializers.ValidationError("At least one pool is required.")
        total = sum(pool['hash_share'] for pool in value)
        if abs(total - 1.0) > SHARE_TOLERANCE:
            raise serializers.ValidationError(f"Hash shares must sum to 1 (got {total!r}).")
        return value

    def create(self, validated_data):
        data = dict(validated_data)
        data['tx_arrival'] = ArrivalModel(**data['tx_arrival'])
        data['pools'] = tuple(MinerPolicy(**pool) for pool in data['pools'])
        return SimConfig(**data)
