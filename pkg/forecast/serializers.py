from rest_framework import serializers

from forecast.models import ArimaModel, MeanModel, NeuralNetModel, TrainingLog


def _pair():
    return serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2)


class ArimaModelSerializer(serializers.Serializer):
    p = serializers.IntegerField(min_value=0)
    d = serializers.IntegerField(min_value=0)
    q = serializers.IntegerField(min_value=0)
    ar_coeffs = serializers.ListField(child=serializers.FloatField())
    ma_coeffs = serializers.ListField(child=serializers.FloatField())
    intercept = serializers.FloatField()
    exog_coeffs = serializers.ListField(child=serializers.FloatField(), default=list)
    noise_variance = serializers.FloatField(min_value=0)
    fitted_on = serializers.CharField(allow_blank=True, default='')
    converged = serializers.BooleanField(default=True)
    iterations = serializers.IntegerField(min_value=0, default=0)

    def validate(self, data):
        if len(data['ar_coeffs']) != data['p'] or len(data['ma_coeffs']) != data['q']:
            raise serializers.ValidationError("Coefficient counts must match the orders.")
        return data

    def create(self, validated_data):
        return ArimaModel(**validated_data)


class TrainingLogSerializer(serializers.Serializer):
    iterations = serializers.IntegerField(min_value=0)
    objective = serializers.FloatField()
    weight_decay = serializers.FloatField(min_value=0)
    converged = serializers.BooleanField()


class NeuralNetModelSerializer(serializers.Serializer):
    input_delays = serializers.IntegerField(min_value=1)
    exog_delays = serializers.IntegerField(min_value=0)
    hidden_units = serializers.IntegerField(min_value=1)
    hidden_weights = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()))
    hidden_biases = serializers.ListField(child=serializers.FloatField())
    output_weights = serializers.ListField(child=serializers.FloatField())
    output_bias = serializers.FloatField()
    y_bounds = _pair()
    x_bounds = serializers.ListField(child=_pair(), default=list)
    training_log = TrainingLogSerializer()
    fitted_on = serializers.CharField(allow_blank=True, default='')

    def create(self, validated_data):
        data = dict(validated_data)
        data['hidden_weights'] = tuple(tuple(row) for row in data['hidden_weights'])
        data['hidden_biases'] = tuple(data['hidden_biases'])
        data['output_weights'] = tuple(data['output_weights'])
        data['y_bounds'] = tuple(data['y_bounds'])
        data['x_bounds'] = tuple(tuple(pair) for pair in data['x_bounds'])
        data['training_log'] = TrainingLog(**data['training_log'])
        return NeuralNetModel(**data)


class MeanModelSerializer(serializers.Serializer):
    mean = serializers.FloatField()
    fitted_on = serializers.CharField(allow_blank=True, default='')

    def create(self, validated_data):
        return MeanModel(**validated_data)
