from rest_framework import serializers

from core.models import UNKNOWN_MINER
from ingest.config import SPLIT_TOLERANCE


class BlockRowSerializer(serializers.Serializer):
    """
    One row of the block CSV (global information part plus mempool state).
    """
    height = serializers.IntegerField(min_value=0)
    timestamp = serializers.IntegerField()
    miner = serializers.CharField(allow_blank=True, trim_whitespace=True)
    size_bytes = serializers.IntegerField(min_value=0)
    tx_count = serializers.IntegerField(min_value=0)
    avg_fee_btc = serializers.DecimalField(max_digits=24, decimal_places=8, min_value=0)
    mempool_tx_count = serializers.IntegerField(min_value=0)
    mempool_bytes = serializers.IntegerField(min_value=0)
    mempool_fee_btc = serializers.DecimalField(max_digits=24, decimal_places=8, min_value=0)

    def validate_miner(self, value):
        # Blank miner means the pool could not be attributed
        return value or UNKNOWN_MINER

    def validate(self, data):
        if data['mempool_tx_count'] == 0 and (data['mempool_bytes'] or data['mempool_fee_btc']):
            raise serializers.ValidationError(
                "An empty mempool cannot carry bytes or fees."
            )
        return data


class TxRowSerializer(serializers.Serializer):
    id = serializers.CharField(max_length=128)
    arrival_ts = serializers.IntegerField()
    confirm_ts = serializers.IntegerField(allow_null=True, required=False, default=None)
    fee_btc = serializers.DecimalField(max_digits=24, decimal_places=8, min_value=0)
    size_bytes = serializers.IntegerField(min_value=1)

    def validate(self, data):
        confirm_ts = data.get('confirm_ts')
        if confirm_ts is not None and confirm_ts < data['arrival_ts']:
            raise serializers.ValidationError(
                "Confirmation time precedes arrival time."
            )
        return data


class SplitSpecSerializer(serializers.Serializer):
    train_frac = serializers.FloatField(min_value=0, max_value=1)
    test_frac = serializers.FloatField(min_value=0, max_value=1)
    val_frac = serializers.FloatField(min_value=0, max_value=1)

    def validate(self, data):
        total = data['train_frac'] + data['test_frac'] + data['val_frac']
        if abs(total - 1.0) > SPLIT_TOLERANCE:
            raise serializers.ValidationError(
                f"Split fractions must sum to 1 (got {total!r})."
            )
        return data
