from rest_framework import serializers

from classify.models import ClassifierKind, ClassifierModel, Hyperparameters, TreeNode


class HyperparametersSerializer(serializers.Serializer):
    max_depth = serializers.IntegerField(min_value=1)
    min_leaf = serializers.IntegerField(min_value=1)
    rounds = serializers.IntegerField(min_value=0, default=0)
    seed = serializers.IntegerField(allow_null=True, default=None)


class ClassifierModelSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=[kind.value for kind in ClassifierKind])
    classes = serializers.ListField(child=serializers.CharField(trim_whitespace=False), min_length=1)
    feature_names = serializers.ListField(child=serializers.CharField(), min_length=1)
    trees = serializers.ListField(child=serializers.JSONField(), min_length=1)
    tree_weights = serializers.ListField(child=serializers.FloatField(), min_length=1)
    hyperparameters = HyperparametersSerializer()
    fitted_on = serializers.CharField(allow_blank=True, default='')

    def validate_trees(self, value):
        try:
            return [TreeNode.from_dict(tree) for tree in value]
        except (AttributeError, KeyError, TypeError, ValueError) as exc:
            raise serializers.ValidationError(f"Malformed tree: {exc!r}")

    def validate(self, data):
        if len(data['trees']) != len(data['tree_weights']):
            raise serializers.ValidationError("Every tree needs exactly one weight.")
        return data

    def create(self, validated_data):
        data = dict(validated_data)
        return ClassifierModel(
            kind=ClassifierKind(data['kind']),
            classes=tuple(data['classes']),
            feature_names=tuple(data['feature_names']),
            trees=tuple(data['trees']),
            tree_weights=tuple(data['tree_weights']),
            hyperparameters=Hyperparameters(**data['hyperparameters']),
            fitted_on=data['fitted_on'],
        )
